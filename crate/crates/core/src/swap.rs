//! Targeted record swapping applied before tabulation.
//!
//! Records that are unique in their block on a set of key attributes are at
//! risk. Each at-risk record is selected with probability
//! `min(1, base_rate * block_size^-size_exponent)` and, when selected, trades
//! its geography with a record from another block that agrees on the match
//! attributes. Demographics never move, so every block keeps its population
//! and the nation-level demographic histogram is unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Attr, Dataset, GeoLevel, GeoUnit, Prototype};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwapConfig {
    pub key_attrs: Vec<Attr>,
    pub match_attrs: Vec<Attr>,
    pub base_rate: f64,
    pub size_exponent: f64,
    /// Only accept partners from a different tract (not just a different block).
    pub require_other_tract: bool,
    pub seed: u64,
}

impl Default for SwapConfig {
    fn default() -> Self {
        SwapConfig {
            key_attrs: vec![Attr::Sex, Attr::Age, Attr::RaceGroup, Attr::Hispanic],
            match_attrs: vec![Attr::Sex, Attr::AgeBucket],
            base_rate: 0.5,
            size_exponent: 0.5,
            require_other_tract: false,
            seed: 0,
        }
    }
}

impl SwapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.base_rate) {
            return Err(Error::Config(format!("base_rate {} outside [0, 1]", self.base_rate)));
        }
        if !self.size_exponent.is_finite() {
            return Err(Error::Config("size_exponent must be finite".into()));
        }
        for a in self.key_attrs.iter().chain(&self.match_attrs) {
            if a.is_geography() {
                return Err(Error::Config(format!(
                    "swap attributes must be demographic, got `{a}`"
                )));
            }
        }
        Ok(())
    }

    fn selection_probability(&self, block_size: u64) -> f64 {
        (self.base_rate * (block_size as f64).powf(-self.size_exponent)).min(1.0)
    }
}

/// Outcome of a swap pass. `pairs` holds record indices and is sensitive: it
/// is only written out on explicit request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub n_at_risk: usize,
    pub n_selected: usize,
    pub n_swapped_pairs: usize,
    /// Selected records left in place because no eligible partner existed.
    pub n_unmatched: usize,
    /// Number of swapped records per original block.
    pub per_block: BTreeMap<GeoUnit, u64>,
    pub pairs: Vec<(usize, usize)>,
}

/// Indices of records whose `key_attrs` projection is unique within their block.
pub fn identify_at_risk(dataset: &Dataset, key_attrs: &[Attr]) -> BTreeSet<usize> {
    let mut attrs = key_attrs.to_vec();
    attrs.sort();
    attrs.dedup();
    let mut counts: HashMap<(GeoUnit, Prototype), u32> = HashMap::new();
    let keys: Vec<(GeoUnit, Prototype)> = dataset
        .records()
        .iter()
        .map(|r| (r.geo_unit(GeoLevel::Block), Prototype::of_record(r, &attrs)))
        .collect();
    for k in &keys {
        *counts.entry(k.clone()).or_insert(0) += 1;
    }
    keys.iter()
        .enumerate()
        .filter(|(_, k)| counts[*k] == 1)
        .map(|(i, _)| i)
        .collect()
}

/// Applies targeted swapping. Deterministic in `config.seed`.
pub fn apply_swap(dataset: &Dataset, config: &SwapConfig) -> Result<(Dataset, SwapReport)> {
    config.validate()?;
    let at_risk = identify_at_risk(dataset, &config.key_attrs);
    let records = dataset.records();
    let block_sizes = dataset.unit_sizes(GeoLevel::Block);

    let mut match_attrs = config.match_attrs.clone();
    match_attrs.sort();
    match_attrs.dedup();
    let mut partners: HashMap<Prototype, Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        partners
            .entry(Prototype::of_record(r, &match_attrs))
            .or_default()
            .push(i);
    }

    let mut rng = seed::rng(seed::derive(config.seed, "swap", 0));
    let mut out = records.to_vec();
    let mut swapped = vec![false; records.len()];
    let mut report = SwapReport {
        n_at_risk: at_risk.len(),
        ..SwapReport::default()
    };
    let scope = if config.require_other_tract {
        GeoLevel::Tract
    } else {
        GeoLevel::Block
    };

    for &i in &at_risk {
        let home = records[i].geo_unit(GeoLevel::Block);
        let p = config.selection_probability(block_sizes[&home]);
        // One coin per at-risk record keeps the random stream independent of pairing outcomes.
        let coin: f64 = rng.gen();
        if coin >= p || swapped[i] {
            continue;
        }
        report.n_selected += 1;
        let own_scope = records[i].geo_unit(scope);
        let candidates: Vec<usize> = partners[&Prototype::of_record(&records[i], &match_attrs)]
            .iter()
            .copied()
            .filter(|&j| !swapped[j] && records[j].geo_unit(scope) != own_scope)
            .collect();
        if candidates.is_empty() {
            report.n_unmatched += 1;
            continue;
        }
        let j = candidates[rng.gen_range(0..candidates.len())];
        out[i].take_geography(&records[j]);
        out[j].take_geography(&records[i]);
        swapped[i] = true;
        swapped[j] = true;
        report.pairs.push((i, j));
        *report.per_block.entry(home).or_insert(0) += 1;
        *report
            .per_block
            .entry(records[j].geo_unit(GeoLevel::Block))
            .or_insert(0) += 1;
    }
    report.n_swapped_pairs = report.pairs.len();
    Ok((Dataset::new(dataset.schema().clone(), out), report))
}
