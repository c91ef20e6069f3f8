use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Oldest representable age.
pub const MAX_AGE: u8 = 115;

/// Number of race codes; 1-6 are the single major groups, 7-63 are combinations.
pub const RACE_CODES: u8 = 63;

/// Number of housing/group-quarters categories (0 = household).
pub const HHGQ_CATEGORIES: u8 = 8;

/// The 23 sex-by-age buckets of the block-level P12 tables, inclusive.
pub const P12_AGE_BUCKETS: [(u8, u8); 23] = [
    (0, 4),
    (5, 9),
    (10, 14),
    (15, 17),
    (18, 19),
    (20, 20),
    (21, 21),
    (22, 24),
    (25, 29),
    (30, 34),
    (35, 39),
    (40, 44),
    (45, 49),
    (50, 54),
    (55, 59),
    (60, 61),
    (62, 64),
    (65, 66),
    (67, 69),
    (70, 74),
    (75, 79),
    (80, 84),
    (85, MAX_AGE),
];

/// The grouped top end of the tract-level PCT12 tables; ages below 100 are single years.
pub const PCT12_TOP_BUCKETS: [(u8, u8); 3] = [(100, 104), (105, 109), (110, MAX_AGE)];

/// Returns the inclusive P12 bucket containing `age`.
pub fn p12_bucket(age: u8) -> (u8, u8) {
    P12_AGE_BUCKETS
        .iter()
        .copied()
        .find(|&(lo, hi)| (lo..=hi).contains(&age))
        .unwrap_or(P12_AGE_BUCKETS[22])
}

/// Returns the PCT12 age cell containing `age`: a single year below 100, a
/// grouped interval above.
pub fn pct12_cell(age: u8) -> (u8, u8) {
    if age < 100 {
        return (age, age);
    }
    PCT12_TOP_BUCKETS
        .iter()
        .copied()
        .find(|&(lo, hi)| (lo..=hi).contains(&age))
        .unwrap_or(PCT12_TOP_BUCKETS[2])
}

/// All PCT12 age cells in table order (103 of them).
pub fn pct12_cells() -> Vec<(u8, u8)> {
    (0..100u8)
        .map(|a| (a, a))
        .chain(PCT12_TOP_BUCKETS)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub const ALL: [Sex; 2] = [Sex::Male, Sex::Female];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

/// Hispanic or Latino origin, with an explicit marker for values the
/// published tables cannot pin down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ethnicity {
    NotHispanic,
    Hispanic,
    Undetermined,
}

impl Ethnicity {
    pub fn from_flag(hispanic: bool) -> Self {
        if hispanic {
            Ethnicity::Hispanic
        } else {
            Ethnicity::NotHispanic
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Ethnicity::NotHispanic => "not_hispanic",
            Ethnicity::Hispanic => "hispanic",
            Ethnicity::Undetermined => "undetermined",
        }
    }
}

/// The seven major race groups distinguished by the published tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaceGroup {
    White,
    Black,
    Aian,
    Asian,
    Nhpi,
    Other,
    TwoOrMore,
}

impl RaceGroup {
    pub const ALL: [RaceGroup; 7] = [
        RaceGroup::White,
        RaceGroup::Black,
        RaceGroup::Aian,
        RaceGroup::Asian,
        RaceGroup::Nhpi,
        RaceGroup::Other,
        RaceGroup::TwoOrMore,
    ];

    /// Maps a 1-63 race code onto its major group.
    pub fn from_code(code: u8) -> Self {
        match code {
            1 => RaceGroup::White,
            2 => RaceGroup::Black,
            3 => RaceGroup::Aian,
            4 => RaceGroup::Asian,
            5 => RaceGroup::Nhpi,
            6 => RaceGroup::Other,
            _ => RaceGroup::TwoOrMore,
        }
    }

    /// A representative race code for this group.
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Table iteration letter for the all-ethnicity tables (A-G).
    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    /// Table iteration letter for the not-Hispanic tables (I-O).
    pub fn not_hispanic_letter(self) -> char {
        (b'I' + self as u8) as char
    }

    pub fn label(self) -> &'static str {
        match self {
            RaceGroup::White => "white",
            RaceGroup::Black => "black",
            RaceGroup::Aian => "aian",
            RaceGroup::Asian => "asian",
            RaceGroup::Nhpi => "nhpi",
            RaceGroup::Other => "other",
            RaceGroup::TwoOrMore => "two_or_more",
        }
    }
}

impl FromStr for RaceGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RaceGroup::ALL
            .into_iter()
            .find(|g| g.label() == s)
            .ok_or_else(|| Error::Schema(format!("unknown race group `{s}`")))
    }
}

/// Geography granularity of a tabulation or projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    Nation,
    State,
    County,
    Tract,
    Block,
}

/// Attributes that can appear in a prototype.
///
/// The first nine are stored columns. `RaceGroup`, `AgeBucket` and
/// `AgeDetail` are derived views used by the tables: the 7 major race groups,
/// the 23 P12 age buckets, and the PCT12 age cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attr {
    State,
    County,
    Tract,
    Block,
    Hhgq,
    Sex,
    Age,
    Hispanic,
    Race,
    RaceGroup,
    AgeBucket,
    AgeDetail,
}

impl Attr {
    /// The nine stored columns, in file order.
    pub const COLUMNS: [Attr; 9] = [
        Attr::State,
        Attr::County,
        Attr::Tract,
        Attr::Block,
        Attr::Hhgq,
        Attr::Sex,
        Attr::Age,
        Attr::Hispanic,
        Attr::Race,
    ];

    pub const DEMOGRAPHIC: [Attr; 5] = [Attr::Hhgq, Attr::Sex, Attr::Age, Attr::Hispanic, Attr::Race];

    pub fn name(self) -> &'static str {
        match self {
            Attr::State => "state",
            Attr::County => "county",
            Attr::Tract => "tract",
            Attr::Block => "block",
            Attr::Hhgq => "hhgq",
            Attr::Sex => "sex",
            Attr::Age => "age",
            Attr::Hispanic => "hispanic",
            Attr::Race => "race",
            Attr::RaceGroup => "race_group",
            Attr::AgeBucket => "age_bucket",
            Attr::AgeDetail => "age_detail",
        }
    }

    pub fn is_geography(self) -> bool {
        matches!(self, Attr::State | Attr::County | Attr::Tract | Attr::Block)
    }

    pub fn is_derived(self) -> bool {
        matches!(self, Attr::RaceGroup | Attr::AgeBucket | Attr::AgeDetail)
    }

    /// The coarsest geography level at which this attribute is still meaningful.
    pub fn geo_level(self) -> Option<GeoLevel> {
        match self {
            Attr::State => Some(GeoLevel::State),
            Attr::County => Some(GeoLevel::County),
            Attr::Tract => Some(GeoLevel::Tract),
            Attr::Block => Some(GeoLevel::Block),
            _ => None,
        }
    }

    /// Parses a comma-separated attribute list.
    pub fn parse_list(s: &str) -> Result<Vec<Attr>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const ALL: [Attr; 12] = [
            Attr::State,
            Attr::County,
            Attr::Tract,
            Attr::Block,
            Attr::Hhgq,
            Attr::Sex,
            Attr::Age,
            Attr::Hispanic,
            Attr::Race,
            Attr::RaceGroup,
            Attr::AgeBucket,
            Attr::AgeDetail,
        ];
        ALL.into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown attribute `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Categorical,
    Ordinal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Categories(Vec<String>),
    Range { min: i64, max: i64 },
}

impl Domain {
    pub fn contains(&self, value: i64) -> bool {
        match self {
            Domain::Categories(c) => value >= 0 && (value as usize) < c.len(),
            Domain::Range { min, max } => (*min..=*max).contains(&value),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Domain::Categories(c) => c.len(),
            Domain::Range { min, max } => (max - min + 1) as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub attr: Attr,
    pub kind: AttrKind,
    pub domain: Domain,
}

/// Ordered column schema of a microdata file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    attributes: Vec<AttributeSpec>,
}

impl AttributeSchema {
    /// The 9-column census person schema.
    pub fn census() -> Self {
        let cats = |names: &[&str]| Domain::Categories(names.iter().map(|s| s.to_string()).collect());
        let spec = |attr, kind, domain| AttributeSpec { attr, kind, domain };
        use AttrKind::*;
        AttributeSchema {
            attributes: vec![
                spec(Attr::State, Categorical, Domain::Range { min: 0, max: 99 }),
                spec(Attr::County, Categorical, Domain::Range { min: 0, max: 999 }),
                spec(Attr::Tract, Categorical, Domain::Range { min: 0, max: 999_999 }),
                spec(Attr::Block, Categorical, Domain::Range { min: 0, max: 9_999 }),
                spec(
                    Attr::Hhgq,
                    Categorical,
                    cats(&[
                        "household",
                        "correctional",
                        "juvenile",
                        "nursing",
                        "other_institutional",
                        "college",
                        "military",
                        "other_noninstitutional",
                    ]),
                ),
                spec(Attr::Sex, Categorical, cats(&["male", "female"])),
                spec(Attr::Age, Ordinal, Domain::Range { min: 0, max: MAX_AGE as i64 }),
                spec(Attr::Hispanic, Categorical, cats(&["not_hispanic", "hispanic"])),
                spec(Attr::Race, Categorical, Domain::Range { min: 1, max: RACE_CODES as i64 }),
            ],
        }
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn get(&self, attr: Attr) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|s| s.attr == attr)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Checks that every attribute is a stored column or derivable from one.
    pub fn check(&self, attrs: &[Attr]) -> Result<()> {
        for &a in attrs {
            let base = match a {
                Attr::RaceGroup => Attr::Race,
                Attr::AgeBucket | Attr::AgeDetail => Attr::Age,
                other => other,
            };
            if self.get(base).is_none() {
                return Err(Error::Schema(format!("attribute `{a}` is not in the schema")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_schema_shape() {
        let s = AttributeSchema::census();
        assert_eq!(s.len(), 9);
        assert_eq!(s.attributes().iter().filter(|a| a.attr.is_geography()).count(), 4);
        assert_eq!(s.get(Attr::Hhgq).unwrap().domain.size(), 8);
        assert_eq!(s.get(Attr::Race).unwrap().domain.size(), 63);
        assert_eq!(s.get(Attr::Age).unwrap().domain.size(), 116);
    }

    #[test]
    fn race_codes_map_to_groups() {
        assert_eq!(RaceGroup::from_code(1), RaceGroup::White);
        assert_eq!(RaceGroup::from_code(6), RaceGroup::Other);
        for code in 7..=63 {
            assert_eq!(RaceGroup::from_code(code), RaceGroup::TwoOrMore);
        }
        assert_eq!(RaceGroup::TwoOrMore.letter(), 'G');
        assert_eq!(RaceGroup::TwoOrMore.not_hispanic_letter(), 'O');
    }

    #[test]
    fn age_buckets_cover_every_age_once() {
        for age in 0..=MAX_AGE {
            let hits = P12_AGE_BUCKETS.iter().filter(|&&(lo, hi)| (lo..=hi).contains(&age)).count();
            assert_eq!(hits, 1, "age {age}");
        }
        assert_eq!(pct12_cells().len(), 103);
        assert_eq!(pct12_cell(57), (57, 57));
        assert_eq!(pct12_cell(112), (110, 115));
        assert_eq!(p12_bucket(16), (15, 17));
    }

    #[test]
    fn unknown_attribute_is_schema_error() {
        assert!(matches!("income".parse::<Attr>(), Err(Error::Schema(_))));
        assert_eq!(Attr::parse_list("sex, age").unwrap(), vec![Attr::Sex, Attr::Age]);
    }
}
