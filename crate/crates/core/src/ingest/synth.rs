use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, PersonRecord, Sex, HHGQ_CATEGORIES, MAX_AGE, RACE_CODES};
use crate::error::{Error, Result};
use crate::seed;

/// How many people live in each generated block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BlockPopulation {
    /// Uniform integer in `[min, max]`.
    Range { min: u32, max: u32 },
    /// Explicit sizes, cycled over blocks in geography order.
    Sizes { sizes: Vec<u32> },
}

/// Desk-scale population generator settings.
///
/// Demographics are drawn per block. With `skew == 0` every person draws each
/// attribute independently from the configured weights. With `skew > 0` each
/// block first samples a pool of `pool_size` prototypes from those weights and
/// people pick pool entry `i` with probability proportional to `(i + 1)^-skew`,
/// so larger skew concentrates a block on fewer prototypes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub states: u16,
    pub counties_per_state: u16,
    pub tracts_per_county: u32,
    pub blocks_per_tract: u16,
    pub block_population: BlockPopulation,
    pub skew: f64,
    pub pool_size: usize,
    pub sex_weights: Vec<f64>,
    /// Length 116 (one per age); empty selects the built-in age profile.
    pub age_weights: Vec<f64>,
    pub hispanic_weights: Vec<f64>,
    /// Length 7 (major groups, the last spread evenly over codes 7-63) or 63.
    pub race_weights: Vec<f64>,
    pub hhgq_weights: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            states: 1,
            counties_per_state: 1,
            tracts_per_county: 4,
            blocks_per_tract: 8,
            block_population: BlockPopulation::Range { min: 20, max: 200 },
            skew: 1.0,
            pool_size: 400,
            sex_weights: vec![0.49, 0.51],
            age_weights: Vec::new(),
            hispanic_weights: vec![0.84, 0.16],
            race_weights: vec![0.62, 0.13, 0.01, 0.06, 0.002, 0.06, 0.03],
            hhgq_weights: vec![0.97, 0.006, 0.001, 0.008, 0.002, 0.008, 0.002, 0.003],
            seed: 0,
        }
    }
}

/// Built-in age profile: flat through 64, linear decline to 100, thin tail after.
pub fn default_age_weights() -> Vec<f64> {
    (0..=MAX_AGE)
        .map(|a| match a {
            0..=64 => 1.0,
            65..=99 => 1.0 - (a as f64 - 64.0) / 37.0,
            _ => 0.002,
        })
        .collect()
}

fn weighted(name: &str, weights: &[f64], expected: &[usize]) -> Result<WeightedIndex<f64>> {
    if !expected.contains(&weights.len()) {
        return Err(Error::Config(format!(
            "{name} needs {expected:?} weights, got {}",
            weights.len()
        )));
    }
    WeightedIndex::new(weights).map_err(|e| Error::Config(format!("{name}: {e}")))
}

struct Sampler {
    sex: WeightedIndex<f64>,
    age: WeightedIndex<f64>,
    hispanic: WeightedIndex<f64>,
    race: WeightedIndex<f64>,
    race_by_group: bool,
    hhgq: WeightedIndex<f64>,
}

impl Sampler {
    fn new(cfg: &SynthConfig) -> Result<Self> {
        let ages = if cfg.age_weights.is_empty() {
            default_age_weights()
        } else {
            cfg.age_weights.clone()
        };
        Ok(Sampler {
            sex: weighted("sex_weights", &cfg.sex_weights, &[2])?,
            age: weighted("age_weights", &ages, &[MAX_AGE as usize + 1])?,
            hispanic: weighted("hispanic_weights", &cfg.hispanic_weights, &[2])?,
            race: weighted("race_weights", &cfg.race_weights, &[7, RACE_CODES as usize])?,
            race_by_group: cfg.race_weights.len() == 7,
            hhgq: weighted("hhgq_weights", &cfg.hhgq_weights, &[HHGQ_CATEGORIES as usize])?,
        })
    }

    /// Draws demographics into a record template (geography untouched).
    fn draw(&self, rng: &mut impl Rng, into: &mut PersonRecord) {
        into.hhgq = self.hhgq.sample(rng) as u8;
        into.sex = Sex::ALL[self.sex.sample(rng)];
        into.age = self.age.sample(rng) as u8;
        into.hispanic = self.hispanic.sample(rng) == 1;
        let r = self.race.sample(rng) as u8;
        into.race = if !self.race_by_group || r < 6 {
            r + 1
        } else {
            rng.gen_range(7..=RACE_CODES)
        };
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let blocks = self.states as u64
            * self.counties_per_state as u64
            * self.tracts_per_county as u64
            * self.blocks_per_tract as u64;
        if blocks == 0 {
            return Err(Error::Config("geography is empty".into()));
        }
        if self.states > 99 || self.counties_per_state > 499 || self.tracts_per_county > 9_999 || self.blocks_per_tract > 8_999 {
            return Err(Error::Config("geography shape exceeds census code widths".into()));
        }
        match &self.block_population {
            BlockPopulation::Range { min, max } if min > max => {
                return Err(Error::Config(format!("block population min {min} > max {max}")));
            }
            BlockPopulation::Sizes { sizes } if sizes.is_empty() => {
                return Err(Error::Config("block population size list is empty".into()));
            }
            _ => {}
        }
        if !(self.skew >= 0.0 && self.skew.is_finite()) {
            return Err(Error::Config(format!("skew must be finite and >= 0, got {}", self.skew)));
        }
        if self.skew > 0.0 && self.pool_size == 0 {
            return Err(Error::Config("pool_size must be positive when skew > 0".into()));
        }
        Sampler::new(self).map(|_| ())
    }

    /// Block geography keys in generation order.
    pub fn blocks(&self) -> Vec<(u16, u16, u32, u16)> {
        let mut out = Vec::new();
        for s in 0..self.states {
            for c in 0..self.counties_per_state {
                for t in 0..self.tracts_per_county {
                    for b in 0..self.blocks_per_tract {
                        out.push((s + 1, 2 * c + 1, 100 * (t + 1), 1000 + b));
                    }
                }
            }
        }
        out
    }
}

/// Generates a synthetic population. Deterministic in `config.seed`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let sampler = Sampler::new(config)?;
    let mut records = Vec::new();
    for (i, (state, county, tract, block)) in config.blocks().into_iter().enumerate() {
        let mut rng = seed::rng(seed::derive(config.seed, "synth-block", i as u64));
        let size = match &config.block_population {
            BlockPopulation::Range { min, max } => rng.gen_range(*min..=*max),
            BlockPopulation::Sizes { sizes } => sizes[i % sizes.len()],
        };
        let template = PersonRecord {
            state,
            county,
            tract,
            block,
            hhgq: 0,
            sex: Sex::Male,
            age: 0,
            hispanic: false,
            race: 1,
        };
        if config.skew == 0.0 {
            for _ in 0..size {
                let mut r = template;
                sampler.draw(&mut rng, &mut r);
                records.push(r);
            }
            continue;
        }
        let pool: Vec<PersonRecord> = (0..config.pool_size)
            .map(|_| {
                let mut r = template;
                sampler.draw(&mut rng, &mut r);
                r
            })
            .collect();
        let weights: Vec<f64> = (0..pool.len())
            .map(|k| ((k + 1) as f64).powf(-config.skew))
            .collect();
        let pick = WeightedIndex::new(&weights).expect("power-law weights are positive");
        for _ in 0..size {
            records.push(pool[pick.sample(&mut rng)]);
        }
    }
    Ok(Dataset::census(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Attr;

    #[test]
    fn degenerate_weights_give_identical_records() {
        let mut age = vec![0.0; 116];
        age[40] = 1.0;
        let cfg = SynthConfig {
            tracts_per_county: 1,
            blocks_per_tract: 1,
            block_population: BlockPopulation::Sizes { sizes: vec![10] },
            sex_weights: vec![0.0, 1.0],
            age_weights: age,
            hispanic_weights: vec![1.0, 0.0],
            race_weights: vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            hhgq_weights: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            ..SynthConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        assert_eq!(d.len(), 10);
        assert!(d.records().iter().all(|r| *r == d.records()[0]));
        assert_eq!(d.records()[0].race, 4);
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = SynthConfig { seed: 99, ..SynthConfig::default() };
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
        let other = SynthConfig { seed: 100, ..cfg.clone() };
        assert_ne!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn block_sizes_follow_config() {
        let cfg = SynthConfig {
            block_population: BlockPopulation::Sizes { sizes: vec![3, 0, 7] },
            ..SynthConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        let sizes = d.unit_sizes(crate::datamodel::GeoLevel::Block);
        let expected: Vec<u32> = (0..cfg.blocks().len()).map(|i| [3, 0, 7][i % 3]).collect();
        let blocks = cfg.blocks();
        for (i, &(s, c, t, b)) in blocks.iter().enumerate() {
            let unit = crate::datamodel::GeoUnit::block(s, c, t, b);
            assert_eq!(sizes.get(&unit).copied().unwrap_or(0), expected[i] as u64);
        }
        let _ = d.histogram(&[Attr::Sex]).unwrap();
    }

    #[test]
    fn empty_geography_is_config_error() {
        let cfg = SynthConfig { states: 0, ..SynthConfig::default() };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::Config(_))));
        let cfg = SynthConfig { sex_weights: vec![1.0], ..SynthConfig::default() };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::Config(_))));
    }
}
