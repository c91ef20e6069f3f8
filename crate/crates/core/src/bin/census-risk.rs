use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use census_risk::pipeline::{Pipeline, RunConfig, RunOptions, Stage};

#[derive(Parser)]
#[command(name = "census-risk", version, about = "Census tabulation, reconstruction, and disclosure-risk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Fail on inconsistent tables instead of warning.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic population.
    Synth,
    /// Load and validate microdata.
    Ingest,
    /// Apply record swapping.
    Swap,
    /// Tabulate the workloads and pick attack units.
    Tabulate,
    /// Reconstruct by differencing tables.
    ReconDiff,
    /// Confidence-ranked reconstruction by relaxed optimization.
    ReconOpt,
    /// Score reconstructions against the protected data.
    Eval,
    /// Run every stage and write the manifest.
    Pipeline,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.common.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    let pipeline = Pipeline::new(
        config,
        RunOptions {
            out: cli.common.out,
            seed: cli.common.seed,
            workers: cli.common.workers,
            strict: cli.common.strict,
        },
    )?;
    let stage = match cli.command {
        Command::Synth => Stage::Synth,
        Command::Ingest => Stage::Ingest,
        Command::Swap => Stage::Swap,
        Command::Tabulate => Stage::Tabulate,
        Command::ReconDiff => Stage::ReconDiff,
        Command::ReconOpt => Stage::ReconOpt,
        Command::Eval => Stage::Eval,
        Command::Pipeline => {
            let manifest = pipeline.run_all()?;
            println!(
                "wrote {} artifacts to {} (config {})",
                manifest.artifacts.len(),
                pipeline.out().display(),
                &manifest.config_sha256[..12]
            );
            return Ok(());
        }
    };
    pipeline.run(stage).with_context(|| format!("stage {}", stage.name()))?;
    println!("{}: done ({})", stage.name(), pipeline.out().display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
