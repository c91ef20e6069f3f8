use std::collections::BTreeMap;

use proptest::prelude::*;

use census_risk::datamodel::multiset_diff;
use census_risk::recon_diff::{reconstruct_block, reconstruct_tract, BLOCK_ATTRS, TRACT_ATTRS};
use census_risk::swap::{apply_swap, SwapConfig};
use census_risk::tabulate::{block_workloads, check_consistency, evaluate_query, tabulate, tract_workloads};
use census_risk::{Attr, Dataset, Ethnicity, GeoLevel, PersonRecord, Sex, Value};

fn record() -> impl Strategy<Value = PersonRecord> {
    (1u32..=2, 0u16..3, any::<bool>(), 0u8..=115, any::<bool>(), 1u8..=63).prop_map(
        |(tract, block, male, age, hispanic, race)| PersonRecord {
            state: 1,
            county: 1,
            tract,
            block: 1000 + block,
            hhgq: 0,
            sex: if male { Sex::Male } else { Sex::Female },
            age,
            hispanic,
            race,
        },
    )
}

/// Narrow domains so prototypes repeat.
fn dense_record() -> impl Strategy<Value = PersonRecord> {
    (record(), 0u8..4, 1u8..=3).prop_map(|(mut r, age, race)| {
        r.age = age;
        r.race = race;
        r
    })
}

fn dataset(max: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop_oneof![record(), dense_record()], 0..max).prop_map(Dataset::census)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_matches_group_by(data in dataset(150)) {
        let h = data.histogram(&[Attr::Sex, Attr::Age]).unwrap();
        let mut oracle: BTreeMap<(Sex, u8), u64> = BTreeMap::new();
        for r in data.records() {
            *oracle.entry((r.sex, r.age)).or_default() += 1;
        }
        prop_assert_eq!(h.len(), oracle.len());
        prop_assert_eq!(h.total(), data.len() as u64);
        for (p, &n) in &h {
            let (Some(Value::Sex(s)), Some(Value::Age(a))) = (p.get(Attr::Sex), p.get(Attr::Age)) else {
                panic!("unexpected prototype {p}");
            };
            prop_assert_eq!(oracle[&(s, a)], n);
        }
    }

    #[test]
    fn finer_projection_refines_coarser(data in dataset(150)) {
        for level in [GeoLevel::Tract, GeoLevel::Block] {
            let fine = data.project(&TRACT_ATTRS, level).unwrap();
            let coarse = data.project(&[Attr::Sex, Attr::RaceGroup], level).unwrap();
            for (unit, h) in fine.iter() {
                prop_assert_eq!(&h.coarsen(&[Attr::Sex, Attr::RaceGroup]).unwrap(), &coarse[unit]);
            }
        }
    }

    #[test]
    fn diff_is_empty_iff_equal(a in dataset(60), b in dataset(60)) {
        let ha = a.histogram(&BLOCK_ATTRS).unwrap();
        let hb = b.histogram(&BLOCK_ATTRS).unwrap();
        let d = multiset_diff(&ha, &hb).unwrap();
        prop_assert_eq!(d.is_empty(), ha == hb);
        prop_assert!(multiset_diff(&ha, &ha).unwrap().is_empty());
        let back = multiset_diff(&hb, &ha).unwrap();
        prop_assert_eq!(&d.only_in_a, &back.only_in_b);
        prop_assert_eq!(d.deltas.len(), back.deltas.len());
        prop_assert!(d.deltas.iter().all(|(p, &x)| back.deltas[p] == -x));
    }

    #[test]
    fn tables_equal_query_evaluation_and_are_consistent(data in dataset(120)) {
        let workloads = [tract_workloads(), block_workloads()].concat();
        for t in tabulate(&data, &workloads) {
            prop_assert!(check_consistency(&t, &workloads).is_empty());
            // Spot-check the first and last cell of every table against a full scan.
            for w in &workloads {
                let Some(inst) = t.get(&w.name) else { continue };
                let queries = w.queries_for(t.unit);
                for i in [0, queries.len() - 1] {
                    prop_assert_eq!(inst.counts[i], evaluate_query(&data, &queries[i]) as i64);
                }
            }
        }
    }

    #[test]
    fn tract_differencing_is_exact(data in dataset(200)) {
        for t in tabulate(&data, &tract_workloads()) {
            let recon = reconstruct_tract(&t).unwrap();
            prop_assert!(recon.exact);
            prop_assert_eq!(recon.histogram, data.project_unit(&TRACT_ATTRS, &t.unit).unwrap());
        }
    }

    #[test]
    fn block_reconstruction_brackets_truth(data in dataset(120)) {
        for t in tabulate(&data, &block_workloads()).iter().filter(|t| t.unit.level == GeoLevel::Block) {
            let partial = reconstruct_block(t).unwrap();
            let truth = data.project_unit(&BLOCK_ATTRS, &t.unit).unwrap();
            prop_assert_eq!(partial.population(), truth.total());
            for (p, &n) in &partial.histogram {
                let known = if p.is_partial() {
                    let h = Value::Ethnicity(Ethnicity::Hispanic);
                    let nh = Value::Ethnicity(Ethnicity::NotHispanic);
                    truth.get(&p.with(Attr::Hispanic, h)) + truth.get(&p.with(Attr::Hispanic, nh))
                } else {
                    truth.get(p)
                };
                prop_assert_eq!(known, n, "{}", p);
            }
        }
    }

    #[test]
    fn swap_preserves_people_and_is_deterministic(data in dataset(150), seed in any::<u64>()) {
        let config = SwapConfig { seed, base_rate: 1.0, ..SwapConfig::default() };
        let (a, report) = apply_swap(&data, &config).unwrap();
        let (b, _) = apply_swap(&data, &config).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), data.len());
        let demo = [Attr::Hhgq, Attr::Sex, Attr::Age, Attr::Hispanic, Attr::Race];
        prop_assert_eq!(a.histogram(&demo).unwrap(), data.histogram(&demo).unwrap());
        // Swaps exchange geography, so every block keeps its size.
        prop_assert_eq!(a.unit_sizes(GeoLevel::Block), data.unit_sizes(GeoLevel::Block));
        prop_assert!(report.n_unmatched <= report.n_selected);
        let moved = data.records().iter().zip(a.records()).filter(|(x, y)| x.block != y.block || x.tract != y.tract).count();
        prop_assert!(moved <= report.n_swapped_pairs * 2);
    }
}
