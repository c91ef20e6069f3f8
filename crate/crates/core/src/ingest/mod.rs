//! Getting microdata in and out: delimited files, synthetic populations, and
//! the choice of which tracts and blocks an experiment attacks.

mod csvio;
mod select;
mod synth;

pub use csvio::{export_microdata, load_microdata, read_microdata, write_microdata, ColumnMap, LoadOptions};
pub use select::{sample_tracts, select_experiment_blocks, SIZE_DIVISORS};
pub use synth::{default_age_weights, generate_synthetic, BlockPopulation, SynthConfig};
