//! Desk-scale census disclosure-risk laboratory.
//!
//! The crate tabulates census-style counting-query workloads over (optionally
//! swapped) person-level microdata, attacks the published tables with two
//! reconstruction strategies, and measures whether the reconstructed records
//! actually carry reidentification or attribute-disclosure risk:
//!
//! - [`datamodel`]: records, prototypes, and multiset histograms.
//! - [`ingest`]: delimited-file I/O, synthetic populations, unit selection.
//! - [`swap`]: targeted record swapping applied before any tabulation.
//! - [`tabulate`]: P1/P6/P7/P9/P11/P12 (block) and PCT12 (tract) workloads.
//! - [`recon_diff`]: exact reconstruction by differencing released tables.
//! - [`recon_opt`]: confidence-ranked reconstruction via relaxed optimization.
//! - [`riskeval`]: multiplicity, match-rate, and attribute-disclosure metrics.
//! - [`pipeline`]: staged, manifest-tracked end-to-end experiments.

pub mod datamodel;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod recon_diff;
pub mod recon_opt;
pub mod riskeval;
pub mod seed;
pub mod swap;
pub mod tabulate;

pub use datamodel::{
    Attr, AttributeSchema, Dataset, Ethnicity, GeoLevel, GeoUnit, Histogram, PersonRecord,
    Prototype, RaceGroup, Sex, Value,
};
pub use error::{Error, Result};
