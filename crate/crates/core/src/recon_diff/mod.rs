//! Exact reconstruction by differencing released tables.
//!
//! At tract level the all-ethnicity iterations (PCT12A-G) minus the
//! not-Hispanic iterations (PCT12I-O) give the Hispanic count of every
//! (sex, age, race group) cell, so the tables invert to a complete list of
//! person prototypes. At block level only White has both iterations (P12A and
//! P12I); every other race keeps its ethnicity symbolic, constrained by the
//! race-by-ethnicity counts in P9.

mod ethnicity;

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{
    pct12_cells, Attr, Ethnicity, GeoLevel, GeoUnit, Histogram, Prototype, RaceGroup, Sex, Value,
    P12_AGE_BUCKETS,
};
use crate::error::{Error, Result};
use crate::tabulate::{sex_age_label, UnitTables};

pub use ethnicity::{enumerate_ethnicity_assignments, AssignmentMode, EthnicityAssignment, EthnicityAssignments};

/// Attributes of tract-level differencing output.
pub const TRACT_ATTRS: [Attr; 4] = [Attr::Sex, Attr::AgeDetail, Attr::RaceGroup, Attr::Hispanic];

/// Attributes of block-level differencing output.
pub const BLOCK_ATTRS: [Attr; 4] = [Attr::Sex, Attr::AgeBucket, Attr::RaceGroup, Attr::Hispanic];

/// How precisely a reconstructed attribute is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrCoverage {
    Point,
    Interval,
    /// Point values for part of the domain, intervals for the rest.
    PointOrInterval,
    /// Some prototypes carry the undetermined sentinel.
    PartlyUndetermined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub attrs: BTreeMap<Attr, AttrCoverage>,
    /// Attributes the tables carry no information about.
    pub not_recovered: Vec<Attr>,
}

/// Published Hispanic count for one race group of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EthnicityMarginal {
    pub total: u64,
    pub hispanic: u64,
}

/// Output of differencing for one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialReconstruction {
    pub unit: GeoUnit,
    pub histogram: Histogram,
    pub coverage: Coverage,
    /// True when every prototype is fully determined.
    pub exact: bool,
    /// Race-by-ethnicity side constraints (block level only).
    pub marginals: BTreeMap<RaceGroup, EthnicityMarginal>,
}

impl PartialReconstruction {
    pub fn population(&self) -> u64 {
        self.histogram.total()
    }

    /// Prototypes whose ethnicity is still undetermined.
    pub fn undetermined(&self) -> impl Iterator<Item = (&Prototype, &u64)> {
        self.histogram
            .iter()
            .filter(|(p, _)| p.get(Attr::Hispanic) == Some(Value::Ethnicity(Ethnicity::Undetermined)))
    }

    /// Writes the reconstruction as CSV: prototype values, multiplicity, and
    /// per-row `interval` / `undetermined` flags.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header: Vec<&str> = self.histogram.attrs().iter().map(|a| a.name()).collect();
        header.extend(["multiplicity", "interval", "undetermined"]);
        w.write_record(&header)?;
        for (p, n) in &self.histogram {
            let mut row: Vec<String> = p.pairs().iter().map(|(_, v)| v.to_string()).collect();
            let interval = p.pairs().iter().any(|(_, v)| matches!(v, Value::AgeRange(..)));
            row.push(n.to_string());
            row.push(interval.to_string());
            row.push(p.is_partial().to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn table_value(tables: &UnitTables, name: &str, label: &str, workloads: &[crate::tabulate::Workload]) -> Result<i64> {
    let missing = || Error::InconsistentTables {
        unit: tables.unit,
        reason: format!("table {name} cell {label} is missing"),
    };
    let w = workloads.iter().find(|w| w.name == name).ok_or_else(missing)?;
    let idx = w.cell_index(label).ok_or_else(missing)?;
    let t = tables.get(name).ok_or_else(missing)?;
    t.counts.get(idx).copied().ok_or_else(missing)
}

fn nonneg(unit: GeoUnit, what: String, n: i64) -> Result<u64> {
    u64::try_from(n).map_err(|_| Error::InconsistentTables {
        unit,
        reason: format!("{what} is negative ({n})"),
    })
}

fn age_value(lo: u8, hi: u8) -> Value {
    if lo == hi {
        Value::Age(lo)
    } else {
        Value::AgeRange(lo, hi)
    }
}

fn prototype(attrs_age: Attr, sex: Sex, age: Value, g: RaceGroup, eth: Ethnicity) -> Prototype {
    Prototype::new(vec![
        (Attr::Sex, Value::Sex(sex)),
        (attrs_age, age),
        (Attr::RaceGroup, Value::RaceGroup(g)),
        (Attr::Hispanic, Value::Ethnicity(eth)),
    ])
}

/// Inverts PCT12A-G and PCT12I-O into prototypes over
/// {sex, age, race group, ethnicity}. Ages 100+ come out as intervals.
pub fn reconstruct_tract(tables: &UnitTables) -> Result<PartialReconstruction> {
    let workloads = crate::tabulate::tract_workloads();
    let unit = tables.unit;
    let mut histogram = Histogram::new(&TRACT_ATTRS);
    for sex in Sex::ALL {
        for (lo, hi) in pct12_cells() {
            let label = sex_age_label(sex, lo, hi);
            for g in RaceGroup::ALL {
                let all_name = format!("PCT12{}", g.letter());
                let not_name = format!("PCT12{}", g.not_hispanic_letter());
                let all = table_value(tables, &all_name, &label, &workloads)?;
                let not = table_value(tables, &not_name, &label, &workloads)?;
                let not = nonneg(unit, format!("{not_name}[{label}]"), not)?;
                let hisp = nonneg(unit, format!("{all_name}[{label}] - {not_name}[{label}]"), all - not as i64)?;
                let age = age_value(lo, hi);
                histogram.add_unchecked(prototype(Attr::AgeDetail, sex, age, g, Ethnicity::Hispanic), hisp);
                histogram.add_unchecked(prototype(Attr::AgeDetail, sex, age, g, Ethnicity::NotHispanic), not);
            }
        }
    }
    if let Ok(total) = table_value(tables, "PCT12", "total", &workloads) {
        if total != histogram.total() as i64 {
            return Err(Error::InconsistentTables {
                unit,
                reason: format!("PCT12 total {total} but iterations sum to {}", histogram.total()),
            });
        }
    }
    let coverage = Coverage {
        attrs: BTreeMap::from([
            (Attr::Sex, AttrCoverage::Point),
            (Attr::AgeDetail, AttrCoverage::PointOrInterval),
            (Attr::RaceGroup, AttrCoverage::Point),
            (Attr::Hispanic, AttrCoverage::Point),
        ]),
        not_recovered: vec![Attr::Block, Attr::Hhgq, Attr::Race],
    };
    Ok(PartialReconstruction {
        unit,
        histogram,
        coverage,
        exact: true,
        marginals: BTreeMap::new(),
    })
}

/// Inverts the block P tables into prototypes over {sex, age bucket, race
/// group, ethnicity}. White ethnicity is exact; other races are resolved only
/// when their P9 Hispanic count is 0 or equals the race total.
pub fn reconstruct_block(tables: &UnitTables) -> Result<PartialReconstruction> {
    let workloads = crate::tabulate::block_workloads();
    let unit = tables.unit;
    if unit.level != GeoLevel::Block {
        return Err(Error::Config(format!("{unit} is not a block")));
    }
    let mut histogram = Histogram::new(&BLOCK_ATTRS);
    let mut marginals = BTreeMap::new();
    let mut exact = true;
    for g in RaceGroup::ALL {
        let table = format!("P12{}", g.letter());
        let total = nonneg(unit, format!("{table}[total]"), table_value(tables, &table, "total", &workloads)?)?;
        let hisp_label = format!("hispanic_{}", g.label());
        let hispanic = nonneg(unit, format!("P9[{hisp_label}]"), table_value(tables, "P9", &hisp_label, &workloads)?)?;
        if hispanic > total {
            return Err(Error::InconsistentTables {
                unit,
                reason: format!("P9 reports {hispanic} Hispanic {} of {total}", g.label()),
            });
        }
        marginals.insert(g, EthnicityMarginal { total, hispanic });

        let resolved = if g == RaceGroup::White {
            None
        } else if hispanic == 0 {
            Some(Ethnicity::NotHispanic)
        } else if hispanic == total {
            Some(Ethnicity::Hispanic)
        } else {
            exact = false;
            Some(Ethnicity::Undetermined)
        };
        for sex in Sex::ALL {
            for (lo, hi) in P12_AGE_BUCKETS {
                let label = sex_age_label(sex, lo, hi);
                let age = Value::AgeRange(lo, hi);
                let n = nonneg(unit, format!("{table}[{label}]"), table_value(tables, &table, &label, &workloads)?)?;
                match resolved {
                    Some(eth) => histogram.add_unchecked(prototype(Attr::AgeBucket, sex, age, g, eth), n),
                    None => {
                        let not = table_value(tables, "P12I", &label, &workloads)?;
                        let not = nonneg(unit, format!("P12I[{label}]"), not)?;
                        let hisp = nonneg(unit, format!("P12A[{label}] - P12I[{label}]"), n as i64 - not as i64)?;
                        histogram.add_unchecked(prototype(Attr::AgeBucket, sex, age, g, Ethnicity::Hispanic), hisp);
                        histogram.add_unchecked(prototype(Attr::AgeBucket, sex, age, g, Ethnicity::NotHispanic), not);
                    }
                }
            }
        }
    }
    let white_hisp: u64 = histogram
        .iter()
        .filter(|(p, _)| {
            p.get(Attr::RaceGroup) == Some(Value::RaceGroup(RaceGroup::White))
                && p.get(Attr::Hispanic) == Some(Value::Ethnicity(Ethnicity::Hispanic))
        })
        .map(|(_, &n)| n)
        .sum();
    if white_hisp != marginals[&RaceGroup::White].hispanic {
        return Err(Error::InconsistentTables {
            unit,
            reason: format!(
                "P12A - P12I gives {white_hisp} Hispanic White but P9 says {}",
                marginals[&RaceGroup::White].hispanic
            ),
        });
    }
    let coverage = Coverage {
        attrs: BTreeMap::from([
            (Attr::Sex, AttrCoverage::Point),
            (Attr::AgeBucket, AttrCoverage::Interval),
            (Attr::RaceGroup, AttrCoverage::Point),
            (
                Attr::Hispanic,
                if exact { AttrCoverage::Point } else { AttrCoverage::PartlyUndetermined },
            ),
        ]),
        not_recovered: vec![Attr::Hhgq, Attr::Race, Attr::Age],
    };
    Ok(PartialReconstruction {
        unit,
        histogram,
        coverage,
        exact,
        marginals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Dataset, PersonRecord};
    use crate::tabulate::{block_workloads, tabulate, tract_workloads};

    fn person(sex: Sex, age: u8, hispanic: bool, race: u8) -> PersonRecord {
        PersonRecord {
            state: 1,
            county: 1,
            tract: 20100,
            block: 1000,
            hhgq: 0,
            sex,
            age,
            hispanic,
            race,
        }
    }

    #[test]
    fn male_infant_white_cell() {
        // 9 White-alone male infants, 7 of them not Hispanic.
        let mut v = vec![person(Sex::Male, 0, true, 1); 2];
        v.extend(vec![person(Sex::Male, 0, false, 1); 7]);
        let d = Dataset::census(v);
        let tables = tabulate(&d, &tract_workloads()).remove(0);
        let r = reconstruct_tract(&tables).unwrap();
        let p = |eth| prototype(Attr::AgeDetail, Sex::Male, Value::Age(0), RaceGroup::White, eth);
        assert_eq!(r.histogram.get(&p(Ethnicity::Hispanic)), 2);
        assert_eq!(r.histogram.get(&p(Ethnicity::NotHispanic)), 7);
        assert_eq!(r.histogram.len(), 2);
        assert!(r.exact);
    }

    #[test]
    fn all_zero_tables_reconstruct_nothing() {
        let ws = tract_workloads();
        let unit = GeoUnit::tract(1, 1, 100);
        let tables = UnitTables {
            unit,
            tables: ws
                .iter()
                .map(|w| {
                    (
                        w.name.clone(),
                        crate::tabulate::TableInstance {
                            workload: w.name.clone(),
                            unit,
                            counts: vec![0; w.cells.len()],
                        },
                    )
                })
                .collect(),
        };
        assert!(reconstruct_tract(&tables).unwrap().histogram.is_empty());
    }

    #[test]
    fn negative_difference_is_inconsistent() {
        let d = Dataset::census(vec![person(Sex::Male, 0, false, 1)]);
        let ws = tract_workloads();
        let mut tables = tabulate(&d, &ws).remove(0);
        let idx = ws[0].cell_index("male_0").unwrap();
        tables.get_mut("PCT12I").unwrap().counts[idx] += 1;
        assert!(matches!(reconstruct_tract(&tables), Err(Error::InconsistentTables { .. })));
    }

    #[test]
    fn white_block_is_fully_determined() {
        let d = Dataset::census(vec![
            person(Sex::Male, 30, true, 1),
            person(Sex::Female, 3, false, 1),
            person(Sex::Female, 3, false, 1),
        ]);
        let tables = tabulate(&d, &block_workloads()).remove(0);
        let r = reconstruct_block(&tables).unwrap();
        assert!(r.exact);
        assert_eq!(r.histogram, d.project_unit(&BLOCK_ATTRS, &tables.unit).unwrap());
    }

    #[test]
    fn zero_hispanic_marginal_resolves_ethnicity() {
        let d = Dataset::census(vec![person(Sex::Male, 20, false, 2); 5]);
        let tables = tabulate(&d, &block_workloads()).remove(0);
        let r = reconstruct_block(&tables).unwrap();
        let p = prototype(Attr::AgeBucket, Sex::Male, Value::AgeRange(20, 20), RaceGroup::Black, Ethnicity::NotHispanic);
        assert_eq!(r.histogram.get(&p), 5);
        assert!(r.exact);
    }

    #[test]
    fn mixed_ethnicity_stays_undetermined() {
        let d = Dataset::census(vec![person(Sex::Male, 20, false, 4), person(Sex::Female, 50, true, 4)]);
        let tables = tabulate(&d, &block_workloads()).remove(0);
        let r = reconstruct_block(&tables).unwrap();
        assert!(!r.exact);
        assert_eq!(r.undetermined().count(), 2);
        assert_eq!(r.marginals[&RaceGroup::Asian], EthnicityMarginal { total: 2, hispanic: 1 });
        assert_eq!(r.coverage.attrs[&Attr::Hispanic], AttrCoverage::PartlyUndetermined);
    }
}
