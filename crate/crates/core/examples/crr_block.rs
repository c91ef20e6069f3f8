//! Confidence-ranked reconstruction of one skewed block: twenty independent
//! optimizer runs, prototypes ranked by how often they come back.
//!
//! ```bash
//! cargo run --release --example crr_block
//! ```

use census_risk::ingest::{generate_synthetic, BlockPopulation, SynthConfig};
use census_risk::recon_opt::{run_crr, Encoding, OptConfig, ReconProblem};
use census_risk::riskeval::{multiplicity_frequency_points, FrequencyMode};
use census_risk::tabulate::{block_workloads, tabulate};
use census_risk::GeoLevel;

fn main() -> census_risk::Result<()> {
    let data = generate_synthetic(&SynthConfig {
        tracts_per_county: 1,
        blocks_per_tract: 1,
        block_population: BlockPopulation::Sizes { sizes: vec![300] },
        skew: 2.0,
        seed: 4,
        ..SynthConfig::default()
    })?;
    let workloads = block_workloads();
    let tables = tabulate(&data, &workloads);
    let block = tables.iter().find(|t| t.unit.level == GeoLevel::Block).unwrap();

    let problem = ReconProblem::from_tables(block, &workloads, Encoding::OneHot)?;
    println!("{}: {} people, {} released cells", block.unit, problem.n_rows, problem.targets.len());
    let ranked = run_crr(&problem, 20, &OptConfig::default())?;
    let truth = data.project_unit(&ranked.attrs, &block.unit)?;

    println!("\nrank  runs  occurrences  in truth  prototype");
    for e in ranked.top(10) {
        println!("{:4}  {:4}  {:11}  {:8}  {}", e.rank, e.frequency, e.occurrences, truth.get(&e.prototype), e.prototype);
    }
    for mode in [FrequencyMode::Occurrences, FrequencyMode::Runs] {
        let mf = multiplicity_frequency_points(&ranked, &truth, mode)?;
        println!(
            "\n{:11} r = {:.3}, top prototype is the most common one: {}",
            mode.label(),
            mf.pearson_r,
            mf.argmax_agreement
        );
    }
    Ok(())
}
