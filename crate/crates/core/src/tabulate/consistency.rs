use std::fmt;

use serde::{Deserialize, Serialize};

use super::query::Workload;
use super::UnitTables;
use crate::datamodel::{GeoUnit, RaceGroup, Sex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A count below zero.
    Negative,
    /// A subtotal cell differs from the sum of its detail cells.
    Subtotal,
    /// The race iterations do not add up to the un-iterated table.
    RaceSum,
    /// `H != sum(A..G) - sum(I..O)`.
    HispanicRedundancy,
    /// A not-Hispanic iteration exceeds its all-ethnicity counterpart.
    NotHispanicExceedsAll,
    /// Two tables disagree on a shared total.
    TotalMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub unit: GeoUnit,
    pub table: String,
    pub cell: String,
    pub kind: ViolationKind,
    pub expected: i64,
    pub actual: i64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}[{}]: {:?} expected {} found {}",
            self.unit, self.table, self.cell, self.kind, self.expected, self.actual
        )
    }
}

struct Checker<'a> {
    unit_tables: &'a UnitTables,
    workloads: &'a [Workload],
    out: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn workload(&self, name: &str) -> Option<&'a Workload> {
        self.unit_tables.get(name)?;
        self.workloads.iter().find(|w| w.name == name)
    }

    fn value(&self, table: &str, label: &str) -> Option<i64> {
        let w = self.workload(table)?;
        let idx = w.cell_index(label)?;
        self.unit_tables.get(table)?.counts.get(idx).copied()
    }

    fn expect(&mut self, table: &str, cell: &str, kind: ViolationKind, expected: i64) {
        if let Some(actual) = self.value(table, cell) {
            if actual != expected {
                self.out.push(Violation {
                    unit: self.unit_tables.unit,
                    table: table.to_string(),
                    cell: cell.to_string(),
                    kind,
                    expected,
                    actual,
                });
            }
        }
    }

    /// Sum of `labels` in `table`, or `None` if any is missing.
    fn sum(&self, table: &str, labels: &[String]) -> Option<i64> {
        labels.iter().map(|l| self.value(table, l)).sum()
    }

    fn negatives(&mut self) {
        for (name, t) in &self.unit_tables.tables {
            let Some(w) = self.workloads.iter().find(|w| &w.name == name) else {
                continue;
            };
            for (c, &n) in w.cells.iter().zip(&t.counts) {
                if n < 0 {
                    self.out.push(Violation {
                        unit: self.unit_tables.unit,
                        table: name.clone(),
                        cell: c.label.clone(),
                        kind: ViolationKind::Negative,
                        expected: 0,
                        actual: n,
                    });
                }
            }
        }
    }

    fn subtotals(&mut self) {
        for w in self.workloads {
            if self.unit_tables.get(&w.name).is_none() {
                continue;
            }
            let has = |l: &str| w.cell_index(l).is_some();
            if has("total") && has("male") && has("female") {
                for sex in Sex::ALL {
                    let prefix = format!("{}_", sex.label());
                    let detail: Vec<String> = w
                        .labels()
                        .filter(|l| l.starts_with(&prefix))
                        .map(str::to_string)
                        .collect();
                    if let Some(s) = self.sum(&w.name, &detail) {
                        self.expect(&w.name, sex.label(), ViolationKind::Subtotal, s);
                    }
                }
                if let Some(s) = self.sum(&w.name, &["male".into(), "female".into()]) {
                    self.expect(&w.name, "total", ViolationKind::Subtotal, s);
                }
            }
            if has("hispanic") && has("not_hispanic") {
                for eth in ["hispanic", "not_hispanic"] {
                    let detail: Vec<String> = RaceGroup::ALL.iter().map(|g| format!("{eth}_{}", g.label())).collect();
                    if let Some(s) = self.sum(&w.name, &detail) {
                        self.expect(&w.name, eth, ViolationKind::Subtotal, s);
                    }
                }
                if let Some(s) = self.sum(&w.name, &["hispanic".into(), "not_hispanic".into()]) {
                    self.expect(&w.name, "total", ViolationKind::Subtotal, s);
                }
            }
            let groups: Vec<String> = RaceGroup::ALL.iter().map(|g| g.label().to_string()).collect();
            if groups.iter().all(|g| has(g)) {
                if let Some(s) = self.sum(&w.name, &groups) {
                    self.expect(&w.name, "total", ViolationKind::Subtotal, s);
                }
                for g in &groups {
                    let parts = [format!("{g}_hispanic"), format!("{g}_not_hispanic")];
                    if parts.iter().all(|p| has(p)) {
                        if let Some(s) = self.sum(&w.name, &parts) {
                            self.expect(&w.name, g, ViolationKind::Subtotal, s);
                        }
                    }
                }
            }
        }
    }

    /// Identities across the race iterations of a sex-by-age table family.
    fn iterations(&mut self, prefix: &str) {
        let Some(base) = self.workload(prefix) else {
            return;
        };
        let labels: Vec<String> = base.labels().map(str::to_string).collect();
        let all: Vec<String> = RaceGroup::ALL.iter().map(|g| format!("{prefix}{}", g.letter())).collect();
        let not_hisp: Vec<String> = RaceGroup::ALL
            .iter()
            .map(|g| format!("{prefix}{}", g.not_hispanic_letter()))
            .collect();
        let hisp = format!("{prefix}H");
        let all_present = all.iter().all(|n| self.workload(n).is_some());
        let not_hisp_present = not_hisp.iter().all(|n| self.workload(n).is_some());

        if all_present {
            for l in &labels {
                let s: Option<i64> = all.iter().map(|t| self.value(t, l)).sum();
                if let Some(s) = s {
                    self.expect(prefix, l, ViolationKind::RaceSum, s);
                }
            }
        }
        if all_present && not_hisp_present && self.workload(&hisp).is_some() {
            for l in &labels {
                let a: Option<i64> = all.iter().map(|t| self.value(t, l)).sum();
                let i: Option<i64> = not_hisp.iter().map(|t| self.value(t, l)).sum();
                if let (Some(a), Some(i)) = (a, i) {
                    self.expect(&hisp, l, ViolationKind::HispanicRedundancy, a - i);
                }
            }
        }
        for (a, i) in all.iter().zip(&not_hisp) {
            if self.workload(a).is_none() || self.workload(i).is_none() {
                continue;
            }
            for l in &labels {
                if let (Some(va), Some(vi)) = (self.value(a, l), self.value(i, l)) {
                    if vi > va {
                        self.out.push(Violation {
                            unit: self.unit_tables.unit,
                            table: i.clone(),
                            cell: l.clone(),
                            kind: ViolationKind::NotHispanicExceedsAll,
                            expected: va,
                            actual: vi,
                        });
                    }
                }
            }
        }
    }

    fn cross_totals(&mut self) {
        if let Some(p1) = self.value("P1", "total") {
            for t in ["P6", "P7", "P9", "P12"] {
                self.expect(t, "total", ViolationKind::TotalMismatch, p1);
            }
        }
        for g in RaceGroup::ALL {
            if let Some(n) = self.value(&format!("P12{}", g.letter()), "total") {
                self.expect("P6", g.label(), ViolationKind::TotalMismatch, n);
                self.expect("P7", g.label(), ViolationKind::TotalMismatch, n);
            }
            if let Some(n) = self.value("P9", &format!("hispanic_{}", g.label())) {
                self.expect("P7", &format!("{}_hispanic", g.label()), ViolationKind::TotalMismatch, n);
            }
            if let Some(n) = self.value("P9", &format!("not_hispanic_{}", g.label())) {
                self.expect("P7", &format!("{}_not_hispanic", g.label()), ViolationKind::TotalMismatch, n);
            }
        }
        if let Some(n) = self.value("P12H", "total") {
            self.expect("P9", "hispanic", ViolationKind::TotalMismatch, n);
        }
        if let Some(n) = self.value("P12I", "total") {
            self.expect("P9", "not_hispanic_white", ViolationKind::TotalMismatch, n);
        }
        for l in ["total", "hispanic", "not_hispanic"] {
            if let (Some(adult), Some(all)) = (self.value("P11", l), self.value("P9", l)) {
                if adult > all {
                    self.out.push(Violation {
                        unit: self.unit_tables.unit,
                        table: "P11".into(),
                        cell: l.into(),
                        kind: ViolationKind::TotalMismatch,
                        expected: all,
                        actual: adult,
                    });
                }
            }
        }
    }
}

/// Checks every identity that holds between and within the released tables of
/// one unit. An empty result means the tables are mutually consistent.
pub fn check_consistency(tables: &UnitTables, workloads: &[Workload]) -> Vec<Violation> {
    let mut c = Checker {
        unit_tables: tables,
        workloads,
        out: Vec::new(),
    };
    c.negatives();
    c.subtotals();
    c.iterations("PCT12");
    c.iterations("P12");
    c.cross_totals();
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Dataset, GeoLevel, PersonRecord};
    use crate::tabulate::{block_workloads, tabulate, tract_workloads};

    fn sample() -> Dataset {
        let mut v = Vec::new();
        for i in 0..60u32 {
            v.push(PersonRecord {
                state: 1,
                county: 1,
                tract: 100,
                block: 1000 + (i % 3) as u16,
                hhgq: 0,
                sex: if i % 2 == 0 { Sex::Male } else { Sex::Female },
                age: (i * 7 % 116) as u8,
                hispanic: i % 5 == 0,
                race: (i % 9 + 1) as u8,
            });
        }
        Dataset::census(v)
    }

    #[test]
    fn clean_tables_have_no_violations() {
        let ws = [block_workloads(), tract_workloads()].concat();
        for t in tabulate(&sample(), &ws) {
            assert_eq!(check_consistency(&t, &ws), vec![]);
        }
    }

    #[test]
    fn corrupted_not_hispanic_cell_breaks_redundancy_once() {
        let ws = tract_workloads();
        let mut t = tabulate(&sample(), &ws).remove(0);
        assert_eq!(t.unit.level, GeoLevel::Tract);
        let idx = ws[0].cell_index("male_0").unwrap();
        t.get_mut("PCT12I").unwrap().counts[idx] += 1;
        let v = check_consistency(&t, &ws);
        let hisp: Vec<&Violation> = v.iter().filter(|v| v.kind == ViolationKind::HispanicRedundancy).collect();
        assert_eq!(hisp.len(), 1);
        assert_eq!((hisp[0].table.as_str(), hisp[0].cell.as_str()), ("PCT12H", "male_0"));
    }

    #[test]
    fn negative_counts_flagged() {
        let ws = block_workloads();
        let mut t = tabulate(&sample(), &ws).remove(0);
        t.get_mut("P1").unwrap().counts[0] = -1;
        assert!(check_consistency(&t, &ws).iter().any(|v| v.kind == ViolationKind::Negative));
    }
}
