//! Declaring a workload in TOML and tabulating it alongside the built-in
//! block tables.
//!
//! ```bash
//! cargo run --example custom_workload
//! ```

use census_risk::ingest::{generate_synthetic, SynthConfig};
use census_risk::tabulate::{evaluate_query, tabulate, WorkloadFile};
use census_risk::GeoLevel;

const WORKLOAD: &str = r#"
[[tables]]
name = "KIDS"
level = "block"

[[tables.cells]]
label = "total"

[[tables.cells]]
label = "under_18"
predicate = { age = [0, 17] }

[[tables.cells]]
label = "hispanic_girls"
predicate = { sex = ["female"], age = [0, 17], hispanic = true }

[[tables.cells]]
label = "asian_or_nhpi"
predicate = { race = ["asian", "nhpi"] }
"#;

fn main() -> census_risk::Result<()> {
    let workloads = WorkloadFile::from_toml(WORKLOAD)?;
    let data = generate_synthetic(&SynthConfig {
        tracts_per_county: 1,
        blocks_per_tract: 4,
        seed: 3,
        ..SynthConfig::default()
    })?;
    let tables = tabulate(&data, &workloads);
    let w = &workloads[0];
    println!("{:20} {}", "block", w.labels().collect::<Vec<_>>().join("  "));
    for t in tables.iter().filter(|t| t.unit.level == GeoLevel::Block) {
        let counts = &t.get("KIDS").unwrap().counts;
        println!("{:20} {:?}", t.unit.to_string(), counts);
        for (q, &n) in w.queries_for(t.unit).iter().zip(counts) {
            assert_eq!(evaluate_query(&data, q) as i64, n);
        }
    }
    println!("\n{}", WorkloadFile::to_toml(&workloads)?);
    Ok(())
}
