//! Running the pipeline stage by stage from code, then writing the manifest.
//! Rerunning with the same config reproduces the manifest byte for byte.
//!
//! ```bash
//! cargo run --release --example staged_pipeline -- /tmp/census-run
//! ```

use std::path::PathBuf;

use census_risk::ingest::BlockPopulation;
use census_risk::pipeline::{Pipeline, RunConfig, RunOptions, Stage};

fn main() -> census_risk::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("census-risk-example"));

    let mut config = RunConfig::default();
    config.seed = 2024;
    config.input.synth.tracts_per_county = 2;
    config.input.synth.blocks_per_tract = 4;
    config.input.synth.block_population = BlockPopulation::Range { min: 40, max: 120 };
    config.input.synth.skew = 2.0;
    config.geography.max_blocks = Some(3);
    config.crr.runs = 8;
    config.crr.opt.n_iterations = 100;

    let pipeline = Pipeline::new(
        config,
        RunOptions {
            out: Some(out.clone()),
            ..RunOptions::default()
        },
    )?;
    let stages = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Swap,
        Stage::Tabulate,
        Stage::ReconDiff,
        Stage::ReconOpt,
        Stage::Eval,
    ];
    for stage in stages {
        pipeline.run(stage)?;
        println!("{:>10} done", stage.name());
    }
    let manifest = pipeline.write_manifest(&stages)?;
    println!("\n{} artifacts under {}", manifest.artifacts.len(), out.display());
    println!("config sha256 {}", manifest.config_sha256);
    print!("\n{}", std::fs::read_to_string(out.join("eval/summary.txt")).unwrap_or_default());
    Ok(())
}
