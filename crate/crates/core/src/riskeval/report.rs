use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::disclosure::attribute_disclosure_eval;
use super::metrics::{
    argmax_agreement, match_rate_at_k, miss_rate, pearson, rare_precision, reid_profile_of, scatter_points,
    spurious_rate, FrequencyMode, MatchRate, Rate, ScatterPoint,
};
use crate::datamodel::{Attr, GeoLevel, GeoUnit, Histogram};
use crate::error::{Error, Result};
use crate::recon_opt::RankedReconstruction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub ms: Vec<u64>,
    pub qi_attrs: Vec<Attr>,
    /// Empty means every reconstructed attribute outside `qi_attrs`.
    pub conf_attrs: Vec<Attr>,
    /// Whether the truth covers the whole population.
    pub exhaustive: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: vec![1, 5, 10, 20],
            ms: vec![1, 2, 3],
            qi_attrs: vec![Attr::Sex, Attr::RaceGroup, Attr::Hispanic],
            conf_attrs: Vec::new(),
            exhaustive: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.contains(&0) {
            return Err(Error::Config("k values must be >= 1".into()));
        }
        if let Some(m) = self.ms.iter().find(|m| !(1..=3).contains(*m)) {
            return Err(Error::Config(format!("m values must be in 1..=3, got {m}")));
        }
        if self.qi_attrs.is_empty() {
            return Err(Error::Config("qi_attrs must not be empty".into()));
        }
        Ok(())
    }

    fn confidential(&self, attrs: &[Attr]) -> Vec<Attr> {
        if self.conf_attrs.is_empty() {
            attrs.iter().copied().filter(|a| !self.qi_attrs.contains(a)).collect()
        } else {
            self.conf_attrs.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RarePrecision {
    pub m: u64,
    pub mode: FrequencyMode,
    pub rate: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidSummary {
    pub records: u64,
    pub prototypes: u64,
    pub shared_records: Rate,
    pub max_multiplicity: u64,
    pub min_probability: f64,
    pub mean_probability_per_record: f64,
    pub mean_probability_per_prototype: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureSummary {
    pub qi_combinations: u64,
    pub condition1: u64,
    pub condition3: u64,
    pub disclosed: u64,
    pub max_diversity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRisk {
    pub unit: GeoUnit,
    pub runs: usize,
    pub truth_prototypes: usize,
    pub reconstructed_prototypes: usize,
    /// Multiplicity-versus-frequency correlation per frequency mode; `None`
    /// when undefined (constant coordinate).
    pub pearson_r_runs: Option<f64>,
    pub pearson_r_occurrences: Option<f64>,
    pub argmax_agreement: bool,
    pub match_rates: Vec<MatchRate>,
    pub rare_precision: Vec<RarePrecision>,
    pub spurious: Rate,
    pub miss: Rate,
    pub reid: ReidSummary,
    pub disclosure: DisclosureSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRisk {
    pub units: usize,
    /// Correlation over the points of all units pooled.
    pub pearson_r_runs: Option<f64>,
    pub pearson_r_occurrences: Option<f64>,
    pub argmax_agreement: Rate,
    /// Mean over units of each match rate.
    pub match_rates: Vec<(usize, f64)>,
    pub rare_precision: Vec<RarePrecision>,
    pub spurious: Rate,
    pub miss: Rate,
    pub reid: ReidSummary,
    pub disclosure: DisclosureSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub level: GeoLevel,
    pub attrs: Vec<Attr>,
    pub units: Vec<UnitRisk>,
    pub aggregate: AggregateRisk,
}

/// Everything evaluated for one unit: its reconstruction and the truth
/// projected onto the reconstruction's attributes.
pub struct UnitInput<'a> {
    pub unit: GeoUnit,
    pub ranked: &'a RankedReconstruction,
    pub truth: &'a Histogram,
}

fn points_xy(points: &[ScatterPoint]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.multiplicity as f64, p.frequency as f64)).collect()
}

fn reid_summary(p: super::metrics::ReidProfile) -> ReidSummary {
    ReidSummary {
        records: p.records,
        prototypes: p.prototypes,
        shared_records: p.shared_records,
        max_multiplicity: p.max_multiplicity,
        min_probability: p.min_probability,
        mean_probability_per_record: p.mean_probability_per_record,
        mean_probability_per_prototype: p.mean_probability_per_prototype,
    }
}

fn evaluate_unit(input: &UnitInput<'_>, config: &EvalConfig) -> Result<UnitRisk> {
    let UnitInput { unit, ranked, truth } = *input;
    let r_of = |mode| -> Result<Option<f64>> {
        let pts = scatter_points(ranked, truth, mode)?;
        Ok(pearson(&points_xy(&pts)).ok())
    };
    let mut rare = Vec::new();
    for &m in &config.ms {
        for mode in [FrequencyMode::Runs, FrequencyMode::Occurrences] {
            rare.push(RarePrecision {
                m,
                mode,
                rate: rare_precision(ranked, truth, m, mode)?,
            });
        }
    }
    let verdicts = attribute_disclosure_eval(
        truth,
        ranked,
        &config.qi_attrs,
        &config.confidential(&ranked.attrs),
        config.exhaustive,
    )?;
    Ok(UnitRisk {
        unit,
        runs: ranked.runs,
        truth_prototypes: truth.len(),
        reconstructed_prototypes: ranked.len(),
        pearson_r_runs: r_of(FrequencyMode::Runs)?,
        pearson_r_occurrences: r_of(FrequencyMode::Occurrences)?,
        argmax_agreement: argmax_agreement(ranked, truth),
        match_rates: config
            .ks
            .iter()
            .map(|&k| match_rate_at_k(ranked, truth, k))
            .collect::<Result<_>>()?,
        rare_precision: rare,
        spurious: spurious_rate(ranked, truth)?,
        miss: miss_rate(ranked, truth)?,
        reid: reid_summary(reid_profile_of(unit.level, [(unit, truth)])),
        disclosure: DisclosureSummary {
            qi_combinations: verdicts.len() as u64,
            condition1: verdicts.iter().filter(|v| v.condition1).count() as u64,
            condition3: verdicts.iter().filter(|v| v.condition3).count() as u64,
            disclosed: verdicts.iter().filter(|v| v.disclosed).count() as u64,
            max_diversity: verdicts.iter().map(|v| v.diversity).max().unwrap_or(0),
        },
    })
}

/// Evaluates every unit (in parallel) and pools the results. Units are
/// reported in the order given.
pub fn evaluate(inputs: &[UnitInput<'_>], config: &EvalConfig) -> Result<RiskReport> {
    config.validate()?;
    let first = inputs
        .first()
        .ok_or_else(|| Error::Config("nothing to evaluate".into()))?;
    let attrs = first.ranked.attrs.clone();
    let level = first.unit.level;
    let units: Vec<UnitRisk> = inputs
        .par_iter()
        .map(|i| evaluate_unit(i, config))
        .collect::<Result<_>>()?;

    let pooled_r = |mode| -> Result<Option<f64>> {
        let mut xy = Vec::new();
        for i in inputs {
            xy.extend(points_xy(&scatter_points(i.ranked, i.truth, mode)?));
        }
        Ok(pearson(&xy).ok())
    };
    let pool = |f: &dyn Fn(&UnitRisk) -> Rate| units.iter().map(f).fold(Rate::new(0, 0), Rate::pool);
    let mut rare = Vec::new();
    for (idx, r) in units[0].rare_precision.iter().enumerate() {
        rare.push(RarePrecision {
            m: r.m,
            mode: r.mode,
            rate: pool(&|u| u.rare_precision[idx].rate),
        });
    }
    let reid = reid_profile_of(level, inputs.iter().map(|i| (i.unit, i.truth)));
    let aggregate = AggregateRisk {
        units: units.len(),
        pearson_r_runs: pooled_r(FrequencyMode::Runs)?,
        pearson_r_occurrences: pooled_r(FrequencyMode::Occurrences)?,
        argmax_agreement: Rate::new(units.iter().filter(|u| u.argmax_agreement).count() as u64, units.len() as u64),
        match_rates: config
            .ks
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, units.iter().map(|u| u.match_rates[i].rate).sum::<f64>() / units.len() as f64))
            .collect(),
        rare_precision: rare,
        spurious: pool(&|u| u.spurious),
        miss: pool(&|u| u.miss),
        reid: reid_summary(reid),
        disclosure: DisclosureSummary {
            qi_combinations: units.iter().map(|u| u.disclosure.qi_combinations).sum(),
            condition1: units.iter().map(|u| u.disclosure.condition1).sum(),
            condition3: units.iter().map(|u| u.disclosure.condition3).sum(),
            disclosed: units.iter().map(|u| u.disclosure.disclosed).sum(),
            max_diversity: units.iter().map(|u| u.disclosure.max_diversity).max().unwrap_or(0),
        },
    };
    Ok(RiskReport {
        level,
        attrs,
        units,
        aggregate,
    })
}

fn pct(r: &Rate) -> String {
    match r.percent {
        Some(p) => format!("{p:.2}% ({}/{})", r.numerator, r.denominator),
        None => format!("undefined ({}/{})", r.numerator, r.denominator),
    }
}

fn corr(r: Option<f64>) -> String {
    r.map_or("undefined".into(), |r| format!("{r:.4}"))
}

impl RiskReport {
    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    /// Plain-text summary of the aggregate and per-unit headline numbers.
    pub fn summary(&self) -> String {
        let a = &self.aggregate;
        let mut s = String::new();
        let attrs: Vec<String> = self.attrs.iter().map(Attr::to_string).collect();
        let _ = writeln!(s, "level: {:?}  units: {}  attributes: {}", self.level, a.units, attrs.join(", "));
        let _ = writeln!(
            s,
            "pearson r (multiplicity vs frequency): occurrences {}  runs {}",
            corr(a.pearson_r_occurrences),
            corr(a.pearson_r_runs)
        );
        let _ = writeln!(s, "argmax agreement: {}", pct(&a.argmax_agreement));
        for (k, r) in &a.match_rates {
            let _ = writeln!(s, "match rate @{k}: {:.4}", r);
        }
        for r in &a.rare_precision {
            let _ = writeln!(s, "rare precision m={} ({}): {}", r.m, r.mode.label(), pct(&r.rate));
        }
        let _ = writeln!(s, "spurious rate: {}", pct(&a.spurious));
        let _ = writeln!(s, "miss rate: {}", pct(&a.miss));
        let _ = writeln!(
            s,
            "records sharing their prototype: {}  max multiplicity: {}  min reid probability: {:.6}",
            pct(&a.reid.shared_records),
            a.reid.max_multiplicity,
            a.reid.min_probability
        );
        let _ = writeln!(
            s,
            "attribute disclosure: {} of {} quasi-identifier groups disclosed (max diversity {})",
            a.disclosure.disclosed, a.disclosure.qi_combinations, a.disclosure.max_diversity
        );
        let _ = writeln!(s);
        for u in &self.units {
            let _ = writeln!(
                s,
                "{}  r_occ {}  r_runs {}  argmax {}  spurious {}  miss {}",
                u.unit,
                corr(u.pearson_r_occurrences),
                corr(u.pearson_r_runs),
                u.argmax_agreement,
                pct(&u.spurious),
                pct(&u.miss)
            );
        }
        s
    }
}

/// Two-column scatter table (`multiplicity,frequency`) in prototype order.
pub fn write_scatter(writer: impl Write, points: &[ScatterPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["multiplicity", "frequency"])?;
    for p in points {
        w.write_record([p.multiplicity.to_string(), p.frequency.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<scatter writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Prototype, Sex, Value};

    #[test]
    fn report_pools_units() {
        let attrs = [Attr::Sex, Attr::Age, Attr::RaceGroup, Attr::Hispanic];
        let proto = |s: Sex, a: u8| {
            Prototype::new(vec![
                (Attr::Sex, Value::Sex(s)),
                (Attr::Age, Value::Age(a)),
                (Attr::RaceGroup, Value::RaceGroup(crate::datamodel::RaceGroup::White)),
                (Attr::Hispanic, Value::Ethnicity(crate::datamodel::Ethnicity::NotHispanic)),
            ])
        };
        let truth = Histogram::from_counts(&attrs, [(proto(Sex::Male, 1), 3), (proto(Sex::Female, 2), 1)]).unwrap();
        let run = Histogram::from_counts(&attrs, [(proto(Sex::Male, 1), 3), (proto(Sex::Female, 9), 1)]).unwrap();
        let ranked = RankedReconstruction::from_runs(&attrs, vec![run], vec![]);
        let inputs = [
            UnitInput {
                unit: GeoUnit::block(1, 1, 100, 1000),
                ranked: &ranked,
                truth: &truth,
            },
            UnitInput {
                unit: GeoUnit::block(1, 1, 100, 1001),
                ranked: &ranked,
                truth: &truth,
            },
        ];
        let r = evaluate(&inputs, &EvalConfig::default()).unwrap();
        assert_eq!(r.aggregate.spurious.numerator, 2);
        assert_eq!(r.aggregate.spurious.denominator, 4);
        assert_eq!(r.aggregate.argmax_agreement.numerator, 2);
        assert!(r.summary().contains("spurious rate: 50.00% (2/4)"));
        let mut json = Vec::new();
        r.write_json(&mut json).unwrap();
        assert!(!json.is_empty());
    }
}
