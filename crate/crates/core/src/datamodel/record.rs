use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::{p12_bucket, pct12_cell, Attr, Ethnicity, GeoLevel, RaceGroup, Sex, HHGQ_CATEGORIES, MAX_AGE, RACE_CODES};
use crate::error::{Error, Result};

/// A single attribute value inside a prototype.
///
/// Intervals and points are distinct variants, so `Age(5)` never equals
/// `AgeRange(5, 5)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Code(u32),
    Sex(Sex),
    Age(u8),
    AgeRange(u8, u8),
    Ethnicity(Ethnicity),
    Race(u8),
    RaceGroup(RaceGroup),
    NotCaptured,
}

impl Value {
    /// Parses the textual form produced by `Display` for the given attribute.
    pub fn parse(attr: Attr, s: &str) -> Result<Self> {
        let bad = || Error::Schema(format!("cannot parse `{s}` as a value of `{attr}`"));
        if s == "*" {
            return Ok(Value::NotCaptured);
        }
        let range = |s: &str| -> Option<Value> {
            let (lo, hi) = s.split_once('-')?;
            Some(Value::AgeRange(lo.parse().ok()?, hi.parse().ok()?))
        };
        Ok(match attr {
            Attr::State | Attr::County | Attr::Tract | Attr::Block | Attr::Hhgq => {
                Value::Code(s.parse().map_err(|_| bad())?)
            }
            Attr::Sex => Value::Sex(match s {
                "male" => Sex::Male,
                "female" => Sex::Female,
                _ => return Err(bad()),
            }),
            Attr::Age | Attr::AgeBucket | Attr::AgeDetail => match range(s) {
                Some(v) => v,
                None => Value::Age(s.parse().map_err(|_| bad())?),
            },
            Attr::Hispanic => Value::Ethnicity(match s {
                "hispanic" => Ethnicity::Hispanic,
                "not_hispanic" => Ethnicity::NotHispanic,
                "undetermined" => Ethnicity::Undetermined,
                _ => return Err(bad()),
            }),
            Attr::Race => Value::Race(s.parse().map_err(|_| bad())?),
            Attr::RaceGroup => Value::RaceGroup(s.parse().map_err(|_| bad())?),
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Code(c) => write!(f, "{c}"),
            Value::Sex(s) => f.write_str(s.label()),
            Value::Age(a) => write!(f, "{a}"),
            Value::AgeRange(lo, hi) => write!(f, "{lo}-{hi}"),
            Value::Ethnicity(e) => f.write_str(e.label()),
            Value::Race(r) => write!(f, "{r}"),
            Value::RaceGroup(g) => f.write_str(g.label()),
            Value::NotCaptured => f.write_str("*"),
        }
    }
}

/// One person row: geography key plus demographics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PersonRecord {
    pub state: u16,
    pub county: u16,
    pub tract: u32,
    pub block: u16,
    pub hhgq: u8,
    pub sex: Sex,
    pub age: u8,
    pub hispanic: bool,
    pub race: u8,
}

impl PersonRecord {
    pub fn race_group(&self) -> RaceGroup {
        RaceGroup::from_code(self.race)
    }

    pub fn value(&self, attr: Attr) -> Value {
        match attr {
            Attr::State => Value::Code(self.state as u32),
            Attr::County => Value::Code(self.county as u32),
            Attr::Tract => Value::Code(self.tract),
            Attr::Block => Value::Code(self.block as u32),
            Attr::Hhgq => Value::Code(self.hhgq as u32),
            Attr::Sex => Value::Sex(self.sex),
            Attr::Age => Value::Age(self.age),
            Attr::Hispanic => Value::Ethnicity(Ethnicity::from_flag(self.hispanic)),
            Attr::Race => Value::Race(self.race),
            Attr::RaceGroup => Value::RaceGroup(self.race_group()),
            Attr::AgeBucket => {
                let (lo, hi) = p12_bucket(self.age);
                Value::AgeRange(lo, hi)
            }
            Attr::AgeDetail => match pct12_cell(self.age) {
                (lo, hi) if lo == hi => Value::Age(lo),
                (lo, hi) => Value::AgeRange(lo, hi),
            },
        }
    }

    /// Checks every value against the census domains. Returns the offending
    /// column and value on failure.
    pub fn check_domains(&self) -> std::result::Result<(), (Attr, String)> {
        if self.state > 99 {
            return Err((Attr::State, self.state.to_string()));
        }
        if self.county > 999 {
            return Err((Attr::County, self.county.to_string()));
        }
        if self.tract > 999_999 {
            return Err((Attr::Tract, self.tract.to_string()));
        }
        if self.block > 9_999 {
            return Err((Attr::Block, self.block.to_string()));
        }
        if self.hhgq >= HHGQ_CATEGORIES {
            return Err((Attr::Hhgq, self.hhgq.to_string()));
        }
        if self.age > MAX_AGE {
            return Err((Attr::Age, self.age.to_string()));
        }
        if !(1..=RACE_CODES).contains(&self.race) {
            return Err((Attr::Race, self.race.to_string()));
        }
        Ok(())
    }

    pub fn geo_unit(&self, level: GeoLevel) -> GeoUnit {
        GeoUnit::of(self, level)
    }

    /// Copies the geography key of `other` into `self`.
    pub fn take_geography(&mut self, other: &PersonRecord) {
        self.state = other.state;
        self.county = other.county;
        self.tract = other.tract;
        self.block = other.block;
    }
}

/// A geographic unit at some level. Fields finer than `level` are zero.
///
/// Serializes as its display string (`SS-CCC-TTTTTT-BBBB` for blocks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeoUnit {
    pub level: GeoLevel,
    pub state: u16,
    pub county: u16,
    pub tract: u32,
    pub block: u16,
}

impl GeoUnit {
    pub const NATION: GeoUnit = GeoUnit {
        level: GeoLevel::Nation,
        state: 0,
        county: 0,
        tract: 0,
        block: 0,
    };

    pub fn of(r: &PersonRecord, level: GeoLevel) -> Self {
        let mut u = GeoUnit {
            level,
            state: r.state,
            county: r.county,
            tract: r.tract,
            block: r.block,
        };
        u.truncate();
        u
    }

    pub fn block(state: u16, county: u16, tract: u32, block: u16) -> Self {
        GeoUnit {
            level: GeoLevel::Block,
            state,
            county,
            tract,
            block,
        }
    }

    pub fn tract(state: u16, county: u16, tract: u32) -> Self {
        GeoUnit {
            level: GeoLevel::Tract,
            state,
            county,
            tract,
            block: 0,
        }
    }

    fn truncate(&mut self) {
        if self.level < GeoLevel::Block {
            self.block = 0;
        }
        if self.level < GeoLevel::Tract {
            self.tract = 0;
        }
        if self.level < GeoLevel::County {
            self.county = 0;
        }
        if self.level < GeoLevel::State {
            self.state = 0;
        }
    }

    /// The enclosing unit at a coarser (or equal) level.
    pub fn ancestor(&self, level: GeoLevel) -> GeoUnit {
        let mut u = *self;
        u.level = level.min(self.level);
        u.truncate();
        u
    }

    pub fn contains(&self, r: &PersonRecord) -> bool {
        GeoUnit::of(r, self.level) == *self
    }
}

impl fmt::Display for GeoUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            GeoLevel::Nation => f.write_str("US"),
            GeoLevel::State => write!(f, "{:02}", self.state),
            GeoLevel::County => write!(f, "{:02}-{:03}", self.state, self.county),
            GeoLevel::Tract => write!(f, "{:02}-{:03}-{:06}", self.state, self.county, self.tract),
            GeoLevel::Block => write!(
                f,
                "{:02}-{:03}-{:06}-{:04}",
                self.state, self.county, self.tract, self.block
            ),
        }
    }
}

impl Serialize for GeoUnit {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GeoUnit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for GeoUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "US" {
            return Ok(GeoUnit::NATION);
        }
        let bad = || Error::Schema(format!("cannot parse geographic unit `{s}`"));
        let parts: Vec<&str> = s.split('-').collect();
        let num = |i: usize| -> Result<u32> { parts[i].parse().map_err(|_| bad()) };
        let level = match parts.len() {
            1 => GeoLevel::State,
            2 => GeoLevel::County,
            3 => GeoLevel::Tract,
            4 => GeoLevel::Block,
            _ => return Err(bad()),
        };
        let mut u = GeoUnit {
            level,
            state: num(0)? as u16,
            ..GeoUnit::NATION
        };
        if parts.len() > 1 {
            u.county = num(1)? as u16;
        }
        if parts.len() > 2 {
            u.tract = num(2)?;
        }
        if parts.len() > 3 {
            u.block = num(3)? as u16;
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec() -> PersonRecord {
        PersonRecord {
            state: 1,
            county: 1,
            tract: 20100,
            block: 1000,
            hhgq: 0,
            sex: Sex::Male,
            age: 104,
            hispanic: true,
            race: 12,
        }
    }

    #[test]
    fn derived_values() {
        let r = rec();
        assert_eq!(r.value(Attr::RaceGroup), Value::RaceGroup(RaceGroup::TwoOrMore));
        assert_eq!(r.value(Attr::AgeDetail), Value::AgeRange(100, 104));
        assert_eq!(r.value(Attr::AgeBucket), Value::AgeRange(85, 115));
        assert_ne!(Value::Age(5), Value::AgeRange(5, 5));
    }

    #[test]
    fn geo_unit_text_round_trips() {
        let r = rec();
        for level in [GeoLevel::Nation, GeoLevel::State, GeoLevel::County, GeoLevel::Tract, GeoLevel::Block] {
            let u = r.geo_unit(level);
            assert_eq!(u.to_string().parse::<GeoUnit>().unwrap(), u);
            assert!(u.contains(&r));
        }
        assert_eq!(r.geo_unit(GeoLevel::Block).to_string(), "01-001-020100-1000");
        assert_eq!(
            r.geo_unit(GeoLevel::Block).ancestor(GeoLevel::Tract),
            r.geo_unit(GeoLevel::Tract)
        );
    }

    #[test]
    fn value_text_round_trips() {
        let r = rec();
        for attr in [Attr::Sex, Attr::Age, Attr::AgeDetail, Attr::AgeBucket, Attr::Hispanic, Attr::Race, Attr::RaceGroup, Attr::Block] {
            let v = r.value(attr);
            assert_eq!(Value::parse(attr, &v.to_string()).unwrap(), v);
        }
        assert_eq!(Value::parse(Attr::Hispanic, "undetermined").unwrap(), Value::Ethnicity(Ethnicity::Undetermined));
    }

    #[test]
    fn domain_check_rejects_old_age() {
        let mut r = rec();
        assert!(r.check_domains().is_ok());
        r.age = 200;
        assert_eq!(r.check_domains(), Err((Attr::Age, "200".into())));
    }
}
