//! One tract where nine White-alone boys are under one year old and seven of
//! them are not Hispanic. Differencing the two released cells recovers the
//! two Hispanic boys exactly.
//!
//! ```bash
//! cargo run --example infant_cell
//! ```

use census_risk::recon_diff::reconstruct_tract;
use census_risk::tabulate::{sex_age_label, tabulate, tract_workloads};
use census_risk::{Attr, Dataset, Ethnicity, GeoLevel, PersonRecord, RaceGroup, Sex, Value};

fn boy(hispanic: bool) -> PersonRecord {
    PersonRecord {
        state: 1,
        county: 1,
        tract: 100,
        block: 1000,
        hhgq: 0,
        sex: Sex::Male,
        age: 0,
        hispanic,
        race: 1,
    }
}

fn main() -> census_risk::Result<()> {
    let mut people = vec![boy(true); 2];
    people.extend(vec![boy(false); 7]);
    let data = Dataset::census(people);

    let workloads = tract_workloads();
    let tables = tabulate(&data, &workloads);
    let tract = tables.iter().find(|t| t.unit.level == GeoLevel::Tract).expect("one tract");
    let label = sex_age_label(Sex::Male, 0, 0);
    for name in ["PCT12A", "PCT12I"] {
        let w = workloads.iter().find(|w| w.name == name).unwrap();
        let idx = w.cell_index(&label).unwrap();
        println!("{name:7} {label:>14} = {}", tract.get(name).unwrap().counts[idx]);
    }

    let recon = reconstruct_tract(tract)?;
    println!("\nreconstructed prototypes (exact = {}):", recon.exact);
    for (p, n) in &recon.histogram {
        let eth = p.get(Attr::Hispanic);
        let tag = match eth {
            Some(Value::Ethnicity(Ethnicity::Hispanic)) => "from PCT12A - PCT12I",
            _ => "from PCT12I",
        };
        println!("  {p}  x{n}  ({tag})");
        assert_eq!(p.get(Attr::RaceGroup), Some(Value::RaceGroup(RaceGroup::White)));
    }
    Ok(())
}
