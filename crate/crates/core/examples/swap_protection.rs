//! Targeted swapping: records unique in their block on the key attributes
//! are swapped (with a size-dependent probability) with a matching record
//! from another block.
//!
//! ```bash
//! cargo run --example swap_protection
//! ```

use census_risk::ingest::{generate_synthetic, SynthConfig};
use census_risk::swap::{apply_swap, identify_at_risk, SwapConfig};
use census_risk::{Attr, GeoLevel};

fn main() -> census_risk::Result<()> {
    let data = generate_synthetic(&SynthConfig {
        seed: 11,
        ..SynthConfig::default()
    })?;
    let config = SwapConfig {
        seed: 5,
        require_other_tract: true,
        ..SwapConfig::default()
    };
    let at_risk = identify_at_risk(&data, &config.key_attrs);
    println!("{} records, {} unique in their block on {:?}", data.len(), at_risk.len(), config.key_attrs);

    let (protected, report) = apply_swap(&data, &config)?;
    println!(
        "selected {}, swapped {} pairs, {} without a partner",
        report.n_selected, report.n_swapped_pairs, report.n_unmatched
    );

    // Swapping moves people, so tract populations stay put only in aggregate.
    let before = data.unit_sizes(GeoLevel::Tract);
    let after = protected.unit_sizes(GeoLevel::Tract);
    for (tract, n) in &before {
        println!("  tract {tract}: {n} -> {}", after.get(tract).copied().unwrap_or(0));
    }
    let attrs = [Attr::Sex, Attr::AgeBucket, Attr::RaceGroup, Attr::Hispanic];
    assert_eq!(data.histogram(&attrs)?, protected.histogram(&attrs)?);
    println!("national demographic histogram unchanged");
    Ok(())
}
