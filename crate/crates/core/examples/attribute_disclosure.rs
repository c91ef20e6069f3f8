//! The three attribute-disclosure conditions on a tiny block. An attacker
//! who knows a person's sex, race and ethnicity learns their age only if the
//! truth and the reconstruction both show a single age for that group.
//!
//! ```bash
//! cargo run --example attribute_disclosure
//! ```

use census_risk::recon_opt::RankedReconstruction;
use census_risk::riskeval::attribute_disclosure_eval;
use census_risk::{Attr, Ethnicity, Histogram, Prototype, RaceGroup, Sex, Value};

const ATTRS: [Attr; 4] = [Attr::Sex, Attr::AgeBucket, Attr::RaceGroup, Attr::Hispanic];

fn p(sex: Sex, bucket: (u8, u8), race: RaceGroup) -> Prototype {
    Prototype::new(vec![
        (Attr::Sex, Value::Sex(sex)),
        (Attr::AgeBucket, Value::AgeRange(bucket.0, bucket.1)),
        (Attr::RaceGroup, Value::RaceGroup(race)),
        (Attr::Hispanic, Value::Ethnicity(Ethnicity::NotHispanic)),
    ])
}

fn main() -> census_risk::Result<()> {
    let truth = Histogram::from_counts(
        &ATTRS,
        [
            (p(Sex::Female, (30, 34), RaceGroup::Asian), 3),
            (p(Sex::Male, (40, 44), RaceGroup::White), 2),
            (p(Sex::Male, (45, 49), RaceGroup::White), 1),
        ],
    )?;
    // One reconstruction run: the Asian women are exact, one White man has the wrong age.
    let run = Histogram::from_counts(
        &ATTRS,
        [
            (p(Sex::Female, (30, 34), RaceGroup::Asian), 3),
            (p(Sex::Male, (40, 44), RaceGroup::White), 3),
        ],
    )?;
    let ranked = RankedReconstruction::from_runs(&ATTRS, vec![run], vec![]);

    let qi = [Attr::Sex, Attr::RaceGroup, Attr::Hispanic];
    for v in attribute_disclosure_eval(&truth, &ranked, &qi, &[Attr::AgeBucket], true)? {
        println!(
            "{}: {} records, one age in truth: {}, diversity in reconstruction: {} -> {}",
            v.qi,
            v.records,
            v.condition1,
            v.diversity,
            if v.disclosed { "DISCLOSED" } else { "safe" }
        );
    }
    Ok(())
}
