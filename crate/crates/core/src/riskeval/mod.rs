//! Disclosure-risk metrics for ranked reconstructions.
//!
//! Every percentage carries its numerator and denominator. The truth passed
//! to each metric is the protected dataset projected onto the attributes the
//! reconstruction covers.

mod disclosure;
mod metrics;
mod report;

pub use disclosure::{attribute_disclosure_eval, DisclosureVerdict};
pub use metrics::{
    argmax_agreement, match_rate_at_k, miss_rate, multiplicity_frequency_points, pearson, rare_precision,
    reid_profile, reid_profile_of, scatter_points, spurious_rate, FrequencyMode, MatchRate, MultiplicityFrequency,
    Rate, ReidEntry, ReidProfile, ScatterPoint,
};
pub use report::{
    evaluate, write_scatter, AggregateRisk, DisclosureSummary, EvalConfig, RarePrecision, ReidSummary, RiskReport,
    UnitInput, UnitRisk,
};
