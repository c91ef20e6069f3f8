use std::collections::{BTreeMap, BTreeSet};

use crate::datamodel::{Dataset, GeoLevel, GeoUnit};
use crate::error::{Error, Result};
use crate::seed;

/// Divisors `C` of the per-state maximum block size `M`; blocks closest to `M / C` are picked.
pub const SIZE_DIVISORS: [u32; 4] = [2, 4, 8, 16];

/// Picks experiment blocks per state: the block closest to the mean block
/// size, the largest block, and the blocks closest to `M / C` for each
/// `C` in [`SIZE_DIVISORS`]. Ties go to the lowest block id. The result is
/// sorted and free of duplicates.
pub fn select_experiment_blocks(dataset: &Dataset) -> Vec<GeoUnit> {
    let mut by_state: BTreeMap<u16, Vec<(GeoUnit, u64)>> = BTreeMap::new();
    for (unit, size) in dataset.unit_sizes(GeoLevel::Block) {
        by_state.entry(unit.state).or_default().push((unit, size));
    }
    let mut chosen = BTreeSet::new();
    for blocks in by_state.values() {
        let max = blocks.iter().map(|&(_, s)| s).max().unwrap_or(0) as f64;
        let mean = blocks.iter().map(|&(_, s)| s as f64).sum::<f64>() / blocks.len() as f64;
        let targets = std::iter::once(mean)
            .chain(std::iter::once(max))
            .chain(SIZE_DIVISORS.iter().map(|&c| max / c as f64));
        for target in targets {
            // `blocks` is in ascending unit order, so `min_by` keeps the lowest id on ties.
            let best = blocks
                .iter()
                .min_by(|a, b| {
                    let da = (a.1 as f64 - target).abs();
                    let db = (b.1 as f64 - target).abs();
                    da.total_cmp(&db).then(a.0.cmp(&b.0))
                })
                .map(|&(u, _)| u);
            chosen.extend(best);
        }
    }
    chosen.into_iter().collect()
}

/// Uniform sample of `n` tracts without replacement, returned sorted.
pub fn sample_tracts(dataset: &Dataset, n: usize, seed_value: u64) -> Result<Vec<GeoUnit>> {
    let tracts: Vec<GeoUnit> = dataset.unit_sizes(GeoLevel::Tract).into_keys().collect();
    if n > tracts.len() {
        return Err(Error::Sampling {
            requested: n,
            available: tracts.len(),
        });
    }
    let mut rng = seed::rng(seed::derive(seed_value, "sample-tracts", 0));
    let mut picked: Vec<GeoUnit> = rand::seq::index::sample(&mut rng, tracts.len(), n)
        .into_iter()
        .map(|i| tracts[i])
        .collect();
    picked.sort();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{PersonRecord, Sex};

    fn block_of(state: u16, block: u16, n: usize) -> Vec<PersonRecord> {
        vec![
            PersonRecord {
                state,
                county: 1,
                tract: 100,
                block,
                hhgq: 0,
                sex: Sex::Male,
                age: 30,
                hispanic: false,
                race: 1,
            };
            n
        ]
    }

    #[test]
    fn single_block_state() {
        let d = Dataset::census(block_of(1, 1000, 5));
        assert_eq!(select_experiment_blocks(&d), vec![GeoUnit::block(1, 1, 100, 1000)]);
    }

    #[test]
    fn closest_size_rule() {
        // Mean of {100,50,25,12,6,3} is 32.67 -> 25; M/2=50, M/4=25, M/8=12.5 -> 12, M/16=6.25 -> 6.
        let sizes = [100, 50, 25, 12, 6, 3];
        let records = sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| block_of(1, 1000 + i as u16, n))
            .collect();
        let d = Dataset::census(records);
        let picked = select_experiment_blocks(&d);
        let got: Vec<u64> = picked
            .iter()
            .map(|u| d.unit_sizes(GeoLevel::Block)[u])
            .collect();
        assert_eq!(got, vec![100, 50, 25, 12, 6]);
    }

    #[test]
    fn ties_go_to_lowest_block() {
        let records = [block_of(1, 1001, 4), block_of(1, 1000, 4)].concat();
        let d = Dataset::census(records);
        assert_eq!(select_experiment_blocks(&d), vec![GeoUnit::block(1, 1, 100, 1000)]);
    }

    #[test]
    fn tract_sampling() {
        let mut records = Vec::new();
        for t in 0..10u32 {
            let mut b = block_of(1, 1000, 2);
            b.iter_mut().for_each(|r| r.tract = 100 * (t + 1));
            records.extend(b);
        }
        let d = Dataset::census(records);
        let all = sample_tracts(&d, 10, 3).unwrap();
        assert_eq!(all, d.unit_sizes(GeoLevel::Tract).into_keys().collect::<Vec<_>>());
        assert!(sample_tracts(&d, 0, 3).unwrap().is_empty());
        assert_eq!(sample_tracts(&d, 4, 3).unwrap(), sample_tracts(&d, 4, 3).unwrap());
        assert!(matches!(sample_tracts(&d, 11, 3), Err(Error::Sampling { .. })));
    }
}
