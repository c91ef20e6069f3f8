//! Records, prototypes, and histogram algebra shared by every other module.

mod dataset;
mod histogram;
mod record;
mod schema;

pub use dataset::{Dataset, UnitHistograms};
pub use histogram::{multiset_diff, Histogram, HistogramDiff, Prototype};
pub use record::{GeoUnit, PersonRecord, Value};
pub use schema::{
    p12_bucket, pct12_cell, pct12_cells, Attr, AttrKind, AttributeSchema, AttributeSpec, Domain,
    Ethnicity, GeoLevel, RaceGroup, Sex, HHGQ_CATEGORIES, MAX_AGE, P12_AGE_BUCKETS,
    PCT12_TOP_BUCKETS, RACE_CODES,
};
