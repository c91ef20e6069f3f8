use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Attr, Dataset, GeoLevel, GeoUnit, Histogram, Prototype};
use crate::error::{Error, Result};
use crate::recon_opt::{RankedEntry, RankedReconstruction};

/// Which per-prototype count of a ranked reconstruction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// Number of runs whose output contains the prototype.
    #[default]
    Runs,
    /// Multiplicity summed over all runs.
    Occurrences,
}

impl FrequencyMode {
    pub fn of(self, e: &RankedEntry) -> u64 {
        match self {
            FrequencyMode::Runs => e.frequency,
            FrequencyMode::Occurrences => e.occurrences,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FrequencyMode::Runs => "runs",
            FrequencyMode::Occurrences => "occurrences",
        }
    }
}

/// A percentage with the counts behind it. `percent` is `None` when the
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub numerator: u64,
    pub denominator: u64,
    pub percent: Option<f64>,
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Rate {
            numerator,
            denominator,
            percent: (denominator > 0).then(|| 100.0 * numerator as f64 / denominator as f64),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.percent.is_some()
    }

    /// Pools two rates by adding numerators and denominators.
    pub fn pool(self, other: Rate) -> Rate {
        Rate::new(self.numerator + other.numerator, self.denominator + other.denominator)
    }
}

/// Sample Pearson correlation.
pub fn pearson(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Undefined(format!("correlation of {} points", points.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant coordinate".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

pub(crate) fn check_attrs(ranked: &RankedReconstruction, truth: &Histogram) -> Result<()> {
    if ranked.attrs != truth.attrs() {
        return Err(Error::Incomparable {
            left: ranked.attrs.iter().map(Attr::to_string).collect(),
            right: truth.attrs().iter().map(Attr::to_string).collect(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRate {
    pub k: usize,
    /// Prototypes actually examined; below `k` when the ranking is shorter.
    pub evaluated: usize,
    pub matched: usize,
    pub rate: f64,
    pub truncated: bool,
}

/// Share of the top `k` ranked prototypes that occur in the truth.
pub fn match_rate_at_k(ranked: &RankedReconstruction, truth: &Histogram, k: usize) -> Result<MatchRate> {
    check_attrs(ranked, truth)?;
    if k == 0 {
        return Err(Error::Config("match rate needs k >= 1".into()));
    }
    let top = ranked.top(k);
    let matched = top.iter().filter(|e| truth.contains(&e.prototype)).count();
    Ok(MatchRate {
        k,
        evaluated: top.len(),
        matched,
        rate: if top.is_empty() { 0.0 } else { matched as f64 / top.len() as f64 },
        truncated: top.len() < k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub prototype: Prototype,
    pub multiplicity: u64,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityFrequency {
    pub mode: FrequencyMode,
    pub points: Vec<ScatterPoint>,
    pub pearson_r: f64,
    /// The top-ranked prototype is a most frequent prototype of the truth.
    pub argmax_agreement: bool,
}

/// One point per prototype of the truth or the ranking, absent sides counted
/// as zero, sorted by prototype.
pub fn scatter_points(ranked: &RankedReconstruction, truth: &Histogram, mode: FrequencyMode) -> Result<Vec<ScatterPoint>> {
    check_attrs(ranked, truth)?;
    let mut joined: BTreeMap<&Prototype, (u64, u64)> = BTreeMap::new();
    for (p, &m) in truth {
        joined.entry(p).or_default().0 = m;
    }
    for e in &ranked.entries {
        joined.entry(&e.prototype).or_default().1 = mode.of(e);
    }
    Ok(joined
        .into_iter()
        .map(|(p, (multiplicity, frequency))| ScatterPoint {
            prototype: p.clone(),
            multiplicity,
            frequency,
        })
        .collect())
}

/// Whether the top-ranked prototype has the largest multiplicity in the
/// truth. With tied maxima any of them counts.
pub fn argmax_agreement(ranked: &RankedReconstruction, truth: &Histogram) -> bool {
    let max = truth.max_multiplicity();
    match ranked.entries.first() {
        Some(top) => max > 0 && truth.get(&top.prototype) == max,
        None => false,
    }
}

/// The multiplicity-versus-frequency scatter with its correlation.
pub fn multiplicity_frequency_points(
    ranked: &RankedReconstruction,
    truth: &Histogram,
    mode: FrequencyMode,
) -> Result<MultiplicityFrequency> {
    let points = scatter_points(ranked, truth, mode)?;
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.multiplicity as f64, p.frequency as f64)).collect();
    Ok(MultiplicityFrequency {
        mode,
        pearson_r: pearson(&xy)?,
        argmax_agreement: argmax_agreement(ranked, truth),
        points,
    })
}

/// Of the prototypes reconstructed at most `m` times, the share that occur
/// exactly `m` times in the truth.
pub fn rare_precision(ranked: &RankedReconstruction, truth: &Histogram, m: u64, mode: FrequencyMode) -> Result<Rate> {
    check_attrs(ranked, truth)?;
    if !(1..=3).contains(&m) {
        return Err(Error::Config(format!("rare precision is defined for m in 1..=3, got {m}")));
    }
    let rare: Vec<&RankedEntry> = ranked.entries.iter().filter(|e| mode.of(e) <= m).collect();
    let hits = rare.iter().filter(|e| truth.get(&e.prototype) == m).count();
    Ok(Rate::new(hits as u64, rare.len() as u64))
}

/// Reconstructed prototypes absent from the truth, relative to the number of
/// prototypes in the truth. May exceed 100%.
pub fn spurious_rate(ranked: &RankedReconstruction, truth: &Histogram) -> Result<Rate> {
    check_attrs(ranked, truth)?;
    let spurious = ranked.entries.iter().filter(|e| !truth.contains(&e.prototype)).count();
    Ok(Rate::new(spurious as u64, truth.len() as u64))
}

/// Prototypes of the truth that no run produced.
pub fn miss_rate(ranked: &RankedReconstruction, truth: &Histogram) -> Result<Rate> {
    check_attrs(ranked, truth)?;
    let produced: std::collections::BTreeSet<&Prototype> = ranked.entries.iter().map(|e| &e.prototype).collect();
    let missed = truth.prototypes().filter(|p| !produced.contains(p)).count();
    Ok(Rate::new(missed as u64, truth.len() as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidEntry {
    pub unit: GeoUnit,
    pub prototype: Prototype,
    pub multiplicity: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidProfile {
    pub level: GeoLevel,
    pub entries: Vec<ReidEntry>,
    pub records: u64,
    pub prototypes: u64,
    /// Records whose prototype is shared with at least one other record.
    pub shared_records: Rate,
    pub max_multiplicity: u64,
    /// `1 / max_multiplicity`: the reidentification probability of the most
    /// common prototype.
    pub min_probability: f64,
    /// Mean of `1 / multiplicity` over records.
    pub mean_probability_per_record: f64,
    /// Mean of `1 / multiplicity` over prototypes.
    pub mean_probability_per_prototype: f64,
}

/// Reidentification exposure of a dataset: every record with prototype
/// multiplicity `mu` in its unit is singled out with probability `1 / mu`.
pub fn reid_profile(dataset: &Dataset, attrs: &[Attr], level: GeoLevel) -> Result<ReidProfile> {
    let units = dataset.project(attrs, level)?;
    Ok(reid_profile_of(level, units.iter().map(|(u, h)| (*u, h))))
}

/// [`reid_profile`] over already projected unit histograms.
pub fn reid_profile_of<'a>(level: GeoLevel, units: impl IntoIterator<Item = (GeoUnit, &'a Histogram)>) -> ReidProfile {
    let mut entries = Vec::new();
    for (unit, h) in units {
        for (p, &m) in h {
            entries.push(ReidEntry {
                unit,
                prototype: p.clone(),
                multiplicity: m,
                probability: 1.0 / m as f64,
            });
        }
    }
    let records: u64 = entries.iter().map(|e| e.multiplicity).sum();
    let shared: u64 = entries.iter().filter(|e| e.multiplicity >= 2).map(|e| e.multiplicity).sum();
    let max_multiplicity = entries.iter().map(|e| e.multiplicity).max().unwrap_or(0);
    let prototypes = entries.len() as u64;
    ReidProfile {
        level,
        records,
        prototypes,
        shared_records: Rate::new(shared, records),
        max_multiplicity,
        min_probability: if max_multiplicity > 0 { 1.0 / max_multiplicity as f64 } else { 0.0 },
        // Each prototype contributes mu records of probability 1/mu.
        mean_probability_per_record: if records > 0 { prototypes as f64 / records as f64 } else { 0.0 },
        mean_probability_per_prototype: if prototypes > 0 {
            entries.iter().map(|e| e.probability).sum::<f64>() / prototypes as f64
        } else {
            0.0
        },
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Sex, Value};

    fn p(n: u8) -> Prototype {
        Prototype::new(vec![(Attr::Sex, Value::Sex(Sex::Male)), (Attr::Age, Value::Age(n))])
    }

    const ATTRS: [Attr; 2] = [Attr::Sex, Attr::Age];

    fn truth(entries: &[(u8, u64)]) -> Histogram {
        Histogram::from_counts(&ATTRS, entries.iter().map(|&(a, n)| (p(a), n))).unwrap()
    }

    fn ranked(runs: &[&[(u8, u64)]]) -> RankedReconstruction {
        RankedReconstruction::from_runs(&ATTRS, runs.iter().map(|r| truth(r)).collect(), vec![])
    }

    #[test]
    fn pearson_lines_and_degenerate() {
        let up: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((pearson(&up).unwrap() - 1.0).abs() < 1e-12);
        let down: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -(i as f64))).collect();
        assert!((pearson(&down).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&[(1.0, 2.0), (1.0, 3.0)]), Err(Error::Undefined(_))));
        assert!(pearson(&[(1.0, 2.0)]).is_err());
    }

    #[test]
    fn match_rate_two_of_three() {
        let r = ranked(&[&[(1, 3), (2, 2), (3, 1)]]);
        let t = truth(&[(1, 1), (3, 1)]);
        let m = match_rate_at_k(&r, &t, 3).unwrap();
        assert_eq!((m.matched, m.evaluated), (2, 3));
        assert!((m.rate - 2.0 / 3.0).abs() < 1e-12);
        let m = match_rate_at_k(&r, &t, 10).unwrap();
        assert!(m.truncated && m.evaluated == 3);
        assert!(match_rate_at_k(&r, &t, 0).is_err());
    }

    #[test]
    fn rare_precision_half() {
        // Two prototypes with frequency 1; one is unique in the truth.
        let r = ranked(&[&[(1, 1), (2, 1)]]);
        let t = truth(&[(1, 1), (2, 5)]);
        let rate = rare_precision(&r, &t, 1, FrequencyMode::Runs).unwrap();
        assert_eq!((rate.numerator, rate.denominator), (1, 2));
        assert_eq!(rate.percent, Some(50.0));
        let absent = rare_precision(&r, &truth(&[(9, 1)]), 1, FrequencyMode::Runs).unwrap();
        assert_eq!(absent.percent, Some(0.0));
        assert!(rare_precision(&r, &t, 4, FrequencyMode::Runs).is_err());
    }

    #[test]
    fn spurious_and_miss_arithmetic() {
        let r = ranked(&[&[(1, 1), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1)]]);
        let t = truth(&[(1, 1), (2, 1)]);
        assert_eq!(spurious_rate(&r, &t).unwrap().percent, Some(250.0));
        assert_eq!(miss_rate(&r, &t).unwrap().percent, Some(50.0));
        let empty = Histogram::new(&ATTRS);
        assert!(!spurious_rate(&r, &empty).unwrap().is_defined());
    }

    #[test]
    fn proportional_frequencies_correlate_perfectly() {
        let r = ranked(&[&[(1, 4), (2, 2), (3, 1)]]);
        let t = truth(&[(1, 4), (2, 2), (3, 1)]);
        let mf = multiplicity_frequency_points(&r, &t, FrequencyMode::Occurrences).unwrap();
        assert!((mf.pearson_r - 1.0).abs() < 1e-12);
        assert!(mf.argmax_agreement);
    }

    #[test]
    fn reid_one_prototype_of_140() {
        let t = truth(&[(30, 140)]);
        let prof = reid_profile_of(GeoLevel::Tract, [(GeoUnit::tract(1, 1, 100), &t)]);
        assert_eq!(prof.min_probability, 1.0 / 140.0);
        assert_eq!(prof.shared_records.percent, Some(100.0));
        let uniq = truth(&[(1, 1), (2, 1)]);
        let prof = reid_profile_of(GeoLevel::Tract, [(GeoUnit::tract(1, 1, 100), &uniq)]);
        assert_eq!(prof.shared_records.percent, Some(0.0));
        assert!(prof.entries.iter().all(|e| e.probability == 1.0));
    }
}
