//! Confidence-ranked reconstruction by optimization.
//!
//! Each person row becomes a set of probability vectors, one per attribute.
//! A relaxed count is the sum over rows of the product of the weight each
//! attribute puts on the accepted categories. Gradient descent fits those
//! counts to the released tables, rows are rounded back to categories, and
//! prototypes are ranked by how many independent runs produced them.

mod crr;
mod optimize;
mod relaxed;

pub use crr::{run_crr, RankedEntry, RankedReconstruction};
pub use optimize::{
    clip_normalize, discretize, initialize, optimize, optimize_from, project_simplex, Baseline, DiscretizeRule,
    InitMode, OptConfig, OptRun, Projection, ReconProblem,
};
pub use relaxed::{
    histogram_answers, loss_and_gradient, relaxed_answer, relaxed_answers, CompiledWorkload, Encoding, Feature,
    FeatureSpace, RelaxedDataset,
};
