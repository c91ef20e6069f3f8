use rand::Rng;
use serde::{Deserialize, Serialize};

use super::relaxed::{loss_and_gradient, CompiledWorkload, Encoding, FeatureSpace, RelaxedDataset};
use crate::datamodel::Histogram;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Independent uniform draws from the simplex for every row.
    #[default]
    Random,
    /// Every row starts at the public marginal distribution.
    Baseline,
}

/// How a weight vector is pulled back onto the simplex after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Euclidean projection onto the simplex.
    #[default]
    Simplex,
    /// Clip to `[0, 1]` and divide by the sum.
    ClipNormalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretizeRule {
    /// Most likely category; ties go to the lowest index.
    #[default]
    Argmax,
    /// One categorical draw per row and attribute.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptConfig {
    /// Step size. The update is `-(learning_rate / n_rows) * gradient`: the
    /// curvature of the loss grows with the row count, so an unscaled step
    /// that works for a block of 50 diverges on a block of 800.
    pub learning_rate: f64,
    pub n_iterations: usize,
    pub init_mode: InitMode,
    pub encoding: Encoding,
    pub projection: Projection,
    pub discretize: DiscretizeRule,
    pub seed: u64,
    /// Baseline rows are `(1 - jitter) * marginal + jitter * u` with `u` drawn
    /// uniformly from the simplex. Identical rows receive identical gradients
    /// and never separate, so some jitter is needed for baseline runs to
    /// produce more than one prototype.
    pub baseline_jitter: f64,
    /// Early stop once the loss drops to this value.
    pub tolerance: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            learning_rate: 0.1,
            n_iterations: 300,
            init_mode: InitMode::Random,
            encoding: Encoding::OneHot,
            projection: Projection::Simplex,
            discretize: DiscretizeRule::Argmax,
            seed: 0,
            baseline_jitter: 0.1,
            tolerance: 1e-6,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.baseline_jitter) {
            return Err(Error::Config(format!("baseline_jitter must be in [0, 1], got {}", self.baseline_jitter)));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::Config(format!("tolerance must be non-negative, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Per-feature category distributions used for baseline initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline(pub Vec<Vec<f64>>);

impl Baseline {
    /// Normalizes raw per-category counts. A feature with zero mass becomes
    /// uniform.
    pub fn from_counts(counts: Vec<Vec<f64>>) -> Self {
        Baseline(
            counts
                .into_iter()
                .map(|c| {
                    let s: f64 = c.iter().sum();
                    if s > 0.0 {
                        c.iter().map(|v| v / s).collect()
                    } else {
                        vec![1.0 / c.len() as f64; c.len()]
                    }
                })
                .collect(),
        )
    }

    fn check(&self, space: &FeatureSpace) -> Result<()> {
        if self.0.len() != space.features.len()
            || self.0.iter().zip(&space.features).any(|(b, f)| b.len() != f.len())
        {
            return Err(Error::Config("baseline distribution does not match the feature space".into()));
        }
        Ok(())
    }
}

/// Everything one optimization needs: the attribute space, compiled queries,
/// their published answers, and the row count.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconProblem {
    pub space: FeatureSpace,
    pub workload: CompiledWorkload,
    pub targets: Vec<f64>,
    pub n_rows: usize,
    pub baseline: Option<Baseline>,
}

/// A finished optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptRun {
    pub relaxed: RelaxedDataset,
    /// Loss before each update and after the last one.
    pub trajectory: Vec<f64>,
}

fn uniform_simplex(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Initial relaxed dataset for a problem.
pub fn initialize(problem: &ReconProblem, mode: InitMode, jitter: f64, seed_value: u64) -> Result<RelaxedDataset> {
    let space = &problem.space;
    let n = problem.n_rows;
    let mut rng = seed::rng(seed::derive(seed_value, "crr-init", 0));
    let params = match mode {
        InitMode::Random => space
            .features
            .iter()
            .map(|f| match f.encoding {
                Encoding::OneHot => (0..n).flat_map(|_| uniform_simplex(&mut rng, f.len())).collect(),
                Encoding::Scalar => (0..n).map(|_| rng.gen::<f64>() * (f.len() - 1) as f64).collect(),
            })
            .collect(),
        InitMode::Baseline => {
            let b = problem
                .baseline
                .as_ref()
                .ok_or_else(|| Error::Config("baseline initialization needs a baseline distribution".into()))?;
            b.check(space)?;
            space
                .features
                .iter()
                .zip(&b.0)
                .map(|(f, dist)| match f.encoding {
                    Encoding::OneHot => (0..n)
                        .flat_map(|_| {
                            let u = if jitter > 0.0 { uniform_simplex(&mut rng, f.len()) } else { vec![0.0; f.len()] };
                            dist.iter().zip(u).map(|(p, u)| (1.0 - jitter) * p + jitter * u).collect::<Vec<_>>()
                        })
                        .collect(),
                    Encoding::Scalar => {
                        let mean: f64 = dist.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
                        let hi = (f.len() - 1) as f64;
                        (0..n)
                            .map(|_| (1.0 - jitter) * mean + jitter * rng.gen::<f64>() * hi)
                            .collect()
                    }
                })
                .collect()
        }
    };
    Ok(RelaxedDataset {
        space: space.clone(),
        n_rows: n,
        params,
    })
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Clips to `[0, 1]` and renormalizes; an all-zero vector collapses onto its
/// largest pre-clip entry.
pub fn clip_normalize(v: &mut [f64]) {
    let best = v
        .iter()
        .enumerate()
        .fold(0, |b, (i, &x)| if x > v[b] { i } else { b });
    v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[best] = 1.0;
    }
}

fn project(x: &mut RelaxedDataset, projection: Projection) {
    for (f, p) in x.space.features.iter().zip(x.params.iter_mut()) {
        match f.encoding {
            Encoding::OneHot => {
                for row in p.chunks_mut(f.len()) {
                    match projection {
                        Projection::Simplex => project_simplex(row),
                        Projection::ClipNormalize => clip_normalize(row),
                    }
                }
            }
            Encoding::Scalar => {
                let hi = (f.len() - 1) as f64;
                p.iter_mut().for_each(|v| *v = v.clamp(0.0, hi));
            }
        }
    }
}

/// Projected gradient descent from `start`.
pub fn optimize_from(problem: &ReconProblem, mut x: RelaxedDataset, config: &OptConfig) -> Result<OptRun> {
    config.validate()?;
    let mut trajectory = Vec::with_capacity(config.n_iterations + 1);
    for _ in 0..config.n_iterations {
        let (loss, grad) = loss_and_gradient(&x, &problem.workload, &problem.targets);
        trajectory.push(loss);
        if loss <= config.tolerance {
            return Ok(OptRun { relaxed: x, trajectory });
        }
        let step = config.learning_rate / problem.n_rows.max(1) as f64;
        for (p, g) in x.params.iter_mut().zip(&grad) {
            p.iter_mut().zip(g).for_each(|(v, d)| *v -= step * d);
        }
        project(&mut x, config.projection);
    }
    let (loss, _) = loss_and_gradient(&x, &problem.workload, &problem.targets);
    trajectory.push(loss);
    Ok(OptRun { relaxed: x, trajectory })
}

/// Initializes per `config.init_mode` (seeded by `seed_value`) and optimizes.
pub fn optimize(problem: &ReconProblem, config: &OptConfig, seed_value: u64) -> Result<OptRun> {
    config.validate()?;
    let x = initialize(problem, config.init_mode, config.baseline_jitter, seed_value)?;
    optimize_from(problem, x, config)
}

/// Rounds a relaxed dataset to a histogram over the feature attributes.
pub fn discretize(x: &RelaxedDataset, rule: DiscretizeRule, seed_value: u64) -> Histogram {
    let space = &x.space;
    let mut rng = seed::rng(seed::derive(seed_value, "crr-discretize", 0));
    let mut h = Histogram::new(&space.attrs());
    let mut weights = Vec::new();
    let mut cats = vec![0usize; space.features.len()];
    for row in 0..x.n_rows {
        for (fi, c) in cats.iter_mut().enumerate() {
            x.membership(fi, row, &mut weights);
            *c = match rule {
                DiscretizeRule::Argmax => weights
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, &w)| if w > weights[b] { i } else { b }),
                DiscretizeRule::Sample => {
                    let total: f64 = weights.iter().sum();
                    let mut u = rng.gen::<f64>() * total;
                    let mut pick = weights.len() - 1;
                    for (i, &w) in weights.iter().enumerate() {
                        if u < w {
                            pick = i;
                            break;
                        }
                        u -= w;
                    }
                    pick
                }
            };
        }
        h.add_unchecked(space.prototype(&cats), 1);
    }
    h
}
