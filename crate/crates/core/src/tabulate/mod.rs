//! Census tables as counting-query workloads.
//!
//! Tabulation is the only view an attacker gets of the data. Block-level
//! releases are the P tables (P1, P6, P7, P9, P11, P12, P12A-I); tract-level
//! releases are PCT12 and its race iterations PCT12A-O.

mod consistency;
mod io;
mod query;
mod workloads;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, GeoLevel, GeoUnit, PersonRecord};

pub use consistency::{check_consistency, Violation, ViolationKind};
pub use io::{read_tables, write_tables};
pub use query::{evaluate_query, Cell, CountingQuery, Predicate, Workload, WorkloadFile};
pub use workloads::{age_label, block_workloads, builtin_workloads, sex_age_label, tract_workloads};

/// Released counts of one workload for one unit, in cell order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableInstance {
    pub workload: String,
    pub unit: GeoUnit,
    pub counts: Vec<i64>,
}

/// Every table released for one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTables {
    pub unit: GeoUnit,
    pub tables: BTreeMap<String, TableInstance>,
}

impl UnitTables {
    pub fn get(&self, name: &str) -> Option<&TableInstance> {
        self.tables.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut TableInstance> {
        self.tables.get_mut(name)
    }
}

/// Counts a workload over a set of records (which must already be restricted
/// to the unit).
pub fn tabulate_records<'a>(workload: &Workload, unit: GeoUnit, records: impl IntoIterator<Item = &'a PersonRecord>) -> TableInstance {
    let mut counts = vec![0i64; workload.cells.len()];
    for r in records {
        for (slot, cell) in counts.iter_mut().zip(&workload.cells) {
            if cell.predicate.matches(r) {
                *slot += 1;
            }
        }
    }
    TableInstance {
        workload: workload.name.clone(),
        unit,
        counts,
    }
}

/// Tabulates every workload for every unit present at the workload's level.
///
/// Output is sorted by unit (tracts before blocks) and independent of the
/// number of worker threads.
pub fn tabulate(dataset: &Dataset, workloads: &[Workload]) -> Vec<UnitTables> {
    let mut levels: Vec<GeoLevel> = workloads.iter().map(|w| w.level).collect();
    levels.sort();
    levels.dedup();
    let mut units = Vec::new();
    for level in levels {
        units.extend(dataset.units(level));
    }
    tabulate_grouped(dataset, workloads, units)
}

/// Tabulates only the listed units.
pub fn tabulate_units(dataset: &Dataset, workloads: &[Workload], units: &[GeoUnit]) -> Vec<UnitTables> {
    let mut wanted: Vec<(GeoUnit, Vec<usize>)> = Vec::new();
    let mut by_level: BTreeMap<GeoLevel, BTreeMap<GeoUnit, Vec<usize>>> = BTreeMap::new();
    for u in units {
        let groups = by_level.entry(u.level).or_insert_with(|| dataset.units(u.level));
        wanted.push((*u, groups.get(u).cloned().unwrap_or_default()));
    }
    wanted.sort_by_key(|(u, _)| *u);
    wanted.dedup_by_key(|(u, _)| *u);
    tabulate_grouped(dataset, workloads, wanted)
}

fn tabulate_grouped(dataset: &Dataset, workloads: &[Workload], units: Vec<(GeoUnit, Vec<usize>)>) -> Vec<UnitTables> {
    let records = dataset.records();
    units
        .into_par_iter()
        .map(|(unit, idx)| {
            let tables = workloads
                .iter()
                .filter(|w| w.level == unit.level)
                .map(|w| {
                    let t = tabulate_records(w, unit, idx.iter().map(|&i| &records[i]));
                    (w.name.clone(), t)
                })
                .collect();
            UnitTables { unit, tables }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{RaceGroup, Sex};

    fn rec(block: u16, sex: Sex, age: u8, hispanic: bool, race: u8) -> PersonRecord {
        PersonRecord {
            state: 1,
            county: 1,
            tract: 20100,
            block,
            hhgq: 0,
            sex,
            age,
            hispanic,
            race,
        }
    }

    #[test]
    fn one_record_lights_one_cell_per_sex_age_table() {
        let d = Dataset::census(vec![rec(1, Sex::Female, 33, false, 2)]);
        let out = tabulate(&d, &block_workloads());
        assert_eq!(out.len(), 1);
        let t = &out[0];
        // The record is Black, not Hispanic, so P12, P12B carry it; P12A/H/I don't.
        for name in ["P12", "P12B"] {
            let counts = &t.get(name).unwrap().counts;
            let w = block_workloads().into_iter().find(|w| w.name == name).unwrap();
            let detail: Vec<i64> = w
                .cells
                .iter()
                .zip(counts)
                .filter(|(c, _)| c.label.contains('_'))
                .map(|(_, &n)| n)
                .collect();
            assert_eq!(detail.iter().sum::<i64>(), 1);
            assert_eq!(detail.iter().filter(|&&n| n > 0).count(), 1);
        }
        for name in ["P12A", "P12H", "P12I"] {
            assert!(t.get(name).unwrap().counts.iter().all(|&n| n == 0));
        }
        assert_eq!(t.get("P1").unwrap().counts, vec![1]);
    }

    #[test]
    fn additive_over_disjoint_datasets() {
        let a = vec![rec(1, Sex::Male, 0, true, 1), rec(2, Sex::Female, 70, false, 9)];
        let b = vec![rec(1, Sex::Male, 0, false, 1), rec(2, Sex::Male, 101, true, 6)];
        let ws = [block_workloads(), tract_workloads()].concat();
        let ta = tabulate(&Dataset::census(a.clone()), &ws);
        let tb = tabulate(&Dataset::census(b.clone()), &ws);
        let tab = tabulate(&Dataset::census([a, b].concat()), &ws);
        for ((x, y), z) in ta.iter().zip(&tb).zip(&tab) {
            assert_eq!(x.unit, z.unit);
            for (name, tz) in &z.tables {
                let sum: Vec<i64> = x.tables[name]
                    .counts
                    .iter()
                    .zip(&y.tables[name].counts)
                    .map(|(p, q)| p + q)
                    .collect();
                assert_eq!(sum, tz.counts, "{name}");
            }
        }
    }

    #[test]
    fn tabulate_units_matches_full_tabulation() {
        let d = Dataset::census(vec![rec(1, Sex::Male, 5, false, 1), rec(2, Sex::Male, 5, false, RaceGroup::Asian.code())]);
        let ws = block_workloads();
        let full = tabulate(&d, &ws);
        let one = tabulate_units(&d, &ws, &[full[1].unit]);
        assert_eq!(one, vec![full[1].clone()]);
    }
}
