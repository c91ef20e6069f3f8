//! Scores CRR output for a handful of blocks: match rate at k, rare-prototype
//! precision, spurious and missed prototypes, and reidentification odds.
//!
//! ```bash
//! cargo run --release --example risk_report
//! ```

use census_risk::ingest::{generate_synthetic, BlockPopulation, SynthConfig};
use census_risk::recon_opt::{run_crr, Encoding, OptConfig, ReconProblem};
use census_risk::riskeval::{evaluate, reid_profile, EvalConfig, UnitInput};
use census_risk::tabulate::{block_workloads, tabulate};
use census_risk::GeoLevel;

fn main() -> census_risk::Result<()> {
    let data = generate_synthetic(&SynthConfig {
        tracts_per_county: 1,
        blocks_per_tract: 3,
        block_population: BlockPopulation::Range { min: 60, max: 150 },
        skew: 1.5,
        seed: 8,
        ..SynthConfig::default()
    })?;
    let workloads = block_workloads();
    let tables = tabulate(&data, &workloads);
    let config = OptConfig {
        n_iterations: 150,
        ..OptConfig::default()
    };

    let mut ranked = Vec::new();
    let mut truths = Vec::new();
    for t in tables.iter().filter(|t| t.unit.level == GeoLevel::Block) {
        let problem = ReconProblem::from_tables(t, &workloads, Encoding::OneHot)?;
        let r = run_crr(&problem, 10, &config)?;
        truths.push((t.unit, data.project_unit(&r.attrs, &t.unit)?));
        ranked.push(r);
    }
    let inputs: Vec<UnitInput> = truths
        .iter()
        .zip(&ranked)
        .map(|((unit, truth), r)| UnitInput { unit: *unit, ranked: r, truth })
        .collect();
    let report = evaluate(&inputs, &EvalConfig::default())?;
    print!("{}", report.summary());

    let profile = reid_profile(&data, &ranked[0].attrs, GeoLevel::Block)?;
    println!(
        "\nblock-level reid: {} of {} records share a prototype, lowest probability {:.4}",
        profile.shared_records.numerator, profile.records, profile.min_probability
    );
    Ok(())
}
