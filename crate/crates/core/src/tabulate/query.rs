use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, GeoLevel, GeoUnit, PersonRecord, RaceGroup, Sex, MAX_AGE};
use crate::error::{Error, Result};

/// Per-attribute accepted values; `None` accepts everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Predicate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sex: Option<Vec<Sex>>,
    /// Inclusive age interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub age: Option<(u8, u8)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub race: Option<Vec<RaceGroup>>,
    /// `Some(true)` accepts Hispanic only, `Some(false)` not Hispanic only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hispanic: Option<bool>,
}

impl Predicate {
    pub fn all() -> Self {
        Predicate::default()
    }

    pub fn sex(mut self, sex: Sex) -> Self {
        self.sex = Some(vec![sex]);
        self
    }

    pub fn ages(mut self, lo: u8, hi: u8) -> Self {
        self.age = Some((lo, hi));
        self
    }

    pub fn race(mut self, group: RaceGroup) -> Self {
        self.race = Some(vec![group]);
        self
    }

    pub fn hispanic(mut self, hispanic: bool) -> Self {
        self.hispanic = Some(hispanic);
        self
    }

    #[inline]
    pub fn matches(&self, r: &PersonRecord) -> bool {
        if let Some(s) = &self.sex {
            if !s.contains(&r.sex) {
                return false;
            }
        }
        if let Some((lo, hi)) = self.age {
            if r.age < lo || r.age > hi {
                return false;
            }
        }
        if let Some(h) = self.hispanic {
            if r.hispanic != h {
                return false;
            }
        }
        if let Some(g) = &self.race {
            if !g.contains(&r.race_group()) {
                return false;
            }
        }
        true
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.age {
            if lo > hi || hi > MAX_AGE {
                return Err(Error::Config(format!("age interval [{lo}, {hi}] is empty or out of range")));
            }
        }
        if self.sex.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::Config("empty sex set".into()));
        }
        if self.race.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::Config("empty race set".into()));
        }
        Ok(())
    }
}

/// A predicate count restricted to one geographic unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingQuery {
    pub scope: GeoUnit,
    pub predicate: Predicate,
}

/// Exact number of records in `q.scope` satisfying `q.predicate`.
pub fn evaluate_query(dataset: &Dataset, q: &CountingQuery) -> u64 {
    dataset
        .records()
        .iter()
        .filter(|r| q.scope.contains(r) && q.predicate.matches(r))
        .count() as u64
}

/// A labelled cell of a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    #[serde(default)]
    pub predicate: Predicate,
}

/// A census table schema: named cells released at one geography level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    pub level: GeoLevel,
    pub cells: Vec<Cell>,
}

impl Workload {
    pub fn cell_index(&self, label: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.label == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.cells.iter().map(|c| c.label.as_str())
    }

    /// The cells bound to one unit.
    pub fn queries_for(&self, unit: GeoUnit) -> Vec<CountingQuery> {
        self.cells
            .iter()
            .map(|c| CountingQuery {
                scope: unit,
                predicate: c.predicate.clone(),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.level, GeoLevel::Tract | GeoLevel::Block) {
            return Err(Error::Config(format!("table {} must be tract or block level", self.name)));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.cells {
            c.predicate
                .validate()
                .map_err(|e| Error::Config(format!("table {} cell {}: {e}", self.name, c.label)))?;
            if !seen.insert(c.label.as_str()) {
                return Err(Error::Config(format!("table {} repeats cell {}", self.name, c.label)));
            }
        }
        Ok(())
    }
}

/// Declarative workload file: `[[tables]]` entries with `name`, `level` and `cells`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadFile {
    pub tables: Vec<Workload>,
}

impl WorkloadFile {
    pub fn from_toml(text: &str) -> Result<Vec<Workload>> {
        let file: WorkloadFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for w in &file.tables {
            w.validate()?;
        }
        Ok(file.tables)
    }

    pub fn to_toml(tables: &[Workload]) -> Result<String> {
        toml::to_string(&WorkloadFile {
            tables: tables.to_vec(),
        })
        .map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicate_matching() {
        let r = PersonRecord {
            state: 1,
            county: 1,
            tract: 1,
            block: 1,
            hhgq: 0,
            sex: Sex::Female,
            age: 18,
            hispanic: true,
            race: 30,
        };
        assert!(Predicate::all().matches(&r));
        assert!(Predicate::all().ages(18, 115).race(RaceGroup::TwoOrMore).matches(&r));
        assert!(!Predicate::all().sex(Sex::Male).matches(&r));
        assert!(!Predicate::all().hispanic(false).matches(&r));
        assert!(!Predicate::all().ages(0, 17).matches(&r));
    }

    #[test]
    fn empty_dataset_counts_zero() {
        let d = Dataset::census(vec![]);
        let q = CountingQuery {
            scope: GeoUnit::NATION,
            predicate: Predicate::all(),
        };
        assert_eq!(evaluate_query(&d, &q), 0);
    }

    #[test]
    fn bad_intervals_rejected() {
        assert!(Predicate::all().ages(10, 5).validate().is_err());
        assert!(Predicate::all().ages(0, 200).validate().is_err());
    }
}
