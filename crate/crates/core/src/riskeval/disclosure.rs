use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::datamodel::{Attr, Histogram, Prototype};
use crate::error::{Error, Result};
use crate::recon_opt::RankedReconstruction;

/// Outcome of the three attribute-disclosure conditions for one
/// quasi-identifier combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosureVerdict {
    pub qi: Prototype,
    /// Records of the truth carrying this combination.
    pub records: u64,
    /// All those records share one confidential combination.
    pub condition1: bool,
    /// The truth is an exhaustive sample of the population (caller asserted).
    pub condition2: bool,
    /// The reconstruction shows exactly one confidential combination.
    pub condition3: bool,
    /// Distinct confidential combinations among matching reconstructed
    /// prototypes.
    pub diversity: usize,
    pub disclosed: bool,
}

fn check_present(attrs: &[Attr], needed: &[Attr], what: &str) -> Result<()> {
    match needed.iter().find(|a| !attrs.contains(a)) {
        Some(a) => Err(Error::Schema(format!("{what} lacks attribute `{a}`"))),
        None => Ok(()),
    }
}

/// Evaluates, for every quasi-identifier combination present in the truth,
/// whether the reconstruction would let an attacker infer the confidential
/// attributes unequivocally.
pub fn attribute_disclosure_eval(
    truth: &Histogram,
    ranked: &RankedReconstruction,
    qi_attrs: &[Attr],
    conf_attrs: &[Attr],
    exhaustive: bool,
) -> Result<Vec<DisclosureVerdict>> {
    if let Some(a) = qi_attrs.iter().find(|a| conf_attrs.contains(a)) {
        return Err(Error::Config(format!("`{a}` is both quasi-identifier and confidential")));
    }
    if qi_attrs.is_empty() || conf_attrs.is_empty() {
        return Err(Error::Config("quasi-identifier and confidential sets must be non-empty".into()));
    }
    check_present(truth.attrs(), qi_attrs, "truth")?;
    check_present(truth.attrs(), conf_attrs, "truth")?;
    check_present(&ranked.attrs, qi_attrs, "reconstruction")?;
    check_present(&ranked.attrs, conf_attrs, "reconstruction")?;

    let mut in_truth: BTreeMap<Prototype, (u64, BTreeSet<Prototype>)> = BTreeMap::new();
    for (p, &n) in truth {
        let e = in_truth.entry(p.restrict(qi_attrs)).or_default();
        e.0 += n;
        e.1.insert(p.restrict(conf_attrs));
    }
    let mut in_recon: BTreeMap<Prototype, BTreeSet<Prototype>> = BTreeMap::new();
    for e in &ranked.entries {
        in_recon
            .entry(e.prototype.restrict(qi_attrs))
            .or_default()
            .insert(e.prototype.restrict(conf_attrs));
    }
    Ok(in_truth
        .into_iter()
        .map(|(qi, (records, conf))| {
            let diversity = in_recon.get(&qi).map_or(0, BTreeSet::len);
            let condition1 = conf.len() == 1;
            let condition3 = diversity == 1;
            DisclosureVerdict {
                qi,
                records,
                condition1,
                condition2: exhaustive,
                condition3,
                diversity,
                disclosed: condition1 && exhaustive && condition3,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Sex, Value};

    const ATTRS: [Attr; 2] = [Attr::Sex, Attr::Age];

    fn p(sex: Sex, age: u8) -> Prototype {
        Prototype::new(vec![(Attr::Sex, Value::Sex(sex)), (Attr::Age, Value::Age(age))])
    }

    fn hist(entries: &[(Sex, u8)]) -> Histogram {
        let mut h = Histogram::new(&ATTRS);
        for &(s, a) in entries {
            h.try_add(p(s, a), 1).unwrap();
        }
        h
    }

    fn ranked(entries: &[(Sex, u8)]) -> RankedReconstruction {
        RankedReconstruction::from_runs(&ATTRS, vec![hist(entries)], vec![])
    }

    #[test]
    fn two_confidential_values_in_truth_is_safe() {
        let truth = hist(&[(Sex::Male, 30), (Sex::Male, 40)]);
        let v = attribute_disclosure_eval(&truth, &ranked(&[(Sex::Male, 30)]), &[Attr::Sex], &[Attr::Age], true).unwrap();
        assert!(!v[0].condition1 && !v[0].disclosed);
    }

    #[test]
    fn reconstruction_diversity_three() {
        let truth = hist(&[(Sex::Female, 30), (Sex::Female, 30)]);
        let r = ranked(&[(Sex::Female, 30), (Sex::Female, 31), (Sex::Female, 32)]);
        let v = attribute_disclosure_eval(&truth, &r, &[Attr::Sex], &[Attr::Age], true).unwrap();
        assert_eq!(v[0].diversity, 3);
        assert!(v[0].condition1 && !v[0].condition3 && !v[0].disclosed);
        let r = ranked(&[(Sex::Female, 30)]);
        let v = attribute_disclosure_eval(&truth, &r, &[Attr::Sex], &[Attr::Age], true).unwrap();
        assert!(v[0].disclosed);
        let v = attribute_disclosure_eval(&truth, &r, &[Attr::Sex], &[Attr::Age], false).unwrap();
        assert!(!v[0].disclosed);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let truth = hist(&[(Sex::Female, 30)]);
        assert!(attribute_disclosure_eval(&truth, &ranked(&[]), &[Attr::Sex], &[Attr::Sex], true).is_err());
    }
}
