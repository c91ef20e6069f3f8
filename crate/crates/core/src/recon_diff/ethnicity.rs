use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};

use super::PartialReconstruction;
use crate::datamodel::{Attr, Ethnicity, Histogram, Prototype, RaceGroup, Value};
use crate::error::{Error, Result};
use crate::seed;

/// Hispanic count assigned to each undetermined prototype.
pub type EthnicityAssignment = BTreeMap<Prototype, u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentMode {
    /// Exact number of consistent joint assignments.
    Count,
    /// `n` independent uniform draws.
    Sample { seed: u64, n: usize },
    /// Every assignment, stopping after `limit`.
    Enumerate { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EthnicityAssignments {
    Count(BigUint),
    Samples(Vec<EthnicityAssignment>),
    Enumerated {
        assignments: Vec<EthnicityAssignment>,
        truncated: bool,
    },
}

/// Undetermined cells of one race and the Hispanic count they must absorb.
struct RaceProblem {
    cells: Vec<(Prototype, u64)>,
    hispanic: u64,
    /// `suffix[i][s]`: ways for cells `i..` to hold exactly `s` Hispanic people.
    suffix: Vec<Vec<BigUint>>,
}

impl RaceProblem {
    fn new(cells: Vec<(Prototype, u64)>, hispanic: u64) -> Self {
        let h = hispanic as usize;
        let mut suffix = vec![vec![BigUint::zero(); h + 1]; cells.len() + 1];
        suffix[cells.len()][0] = BigUint::one();
        for i in (0..cells.len()).rev() {
            let cap = cells[i].1 as usize;
            for s in 0..=h {
                let mut acc = BigUint::zero();
                for x in 0..=cap.min(s) {
                    acc += &suffix[i + 1][s - x];
                }
                suffix[i][s] = acc;
            }
        }
        RaceProblem { cells, hispanic, suffix }
    }

    fn count(&self) -> &BigUint {
        &self.suffix[0][self.hispanic as usize]
    }

    fn sample(&self, rng: &mut impl rand::Rng, out: &mut EthnicityAssignment) {
        let mut remaining = self.hispanic as usize;
        let mut r = rng.gen_biguint_below(self.count());
        for (i, (p, cap)) in self.cells.iter().enumerate() {
            let mut chosen = 0;
            for x in 0..=(*cap as usize).min(remaining) {
                let w = &self.suffix[i + 1][remaining - x];
                if &r < w {
                    chosen = x;
                    break;
                }
                r -= w;
            }
            out.insert(p.clone(), chosen as u64);
            remaining -= chosen;
        }
    }

    fn enumerate(&self, i: usize, remaining: usize, current: &mut Vec<u64>, sink: &mut dyn FnMut(&[u64]) -> bool) -> bool {
        if i == self.cells.len() {
            return remaining != 0 || sink(current);
        }
        for x in 0..=(self.cells[i].1 as usize).min(remaining) {
            if self.suffix[i + 1][remaining - x].is_zero() {
                continue;
            }
            current.push(x as u64);
            let keep_going = self.enumerate(i + 1, remaining - x, current, sink);
            current.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
}

fn is_undetermined(p: &Prototype) -> bool {
    p.get(Attr::Hispanic) == Some(Value::Ethnicity(Ethnicity::Undetermined))
}

fn problems(partial: &PartialReconstruction) -> Result<Vec<RaceProblem>> {
    if partial.marginals.is_empty() {
        return Err(Error::Config(format!(
            "reconstruction of {} carries no ethnicity side constraints",
            partial.unit
        )));
    }
    let mut out = Vec::new();
    for g in RaceGroup::ALL {
        let in_group = |p: &Prototype| p.get(Attr::RaceGroup) == Some(Value::RaceGroup(g));
        let cells: Vec<(Prototype, u64)> = partial
            .histogram
            .iter()
            .filter(|(p, _)| in_group(p) && is_undetermined(p))
            .map(|(p, &n)| (p.clone(), n))
            .collect();
        let known: u64 = partial
            .histogram
            .iter()
            .filter(|(p, _)| in_group(p) && p.get(Attr::Hispanic) == Some(Value::Ethnicity(Ethnicity::Hispanic)))
            .map(|(_, &n)| n)
            .sum();
        let target = partial.marginals.get(&g).map_or(0, |m| m.hispanic);
        let capacity: u64 = cells.iter().map(|(_, n)| n).sum();
        let hispanic = target.checked_sub(known).ok_or_else(|| {
            Error::Infeasible(format!("{}: {known} determined Hispanic exceed marginal {target}", g.label()))
        })?;
        if hispanic > capacity {
            return Err(Error::Infeasible(format!(
                "{}: {hispanic} Hispanic people but only {capacity} undetermined",
                g.label()
            )));
        }
        if !cells.is_empty() {
            out.push(RaceProblem::new(cells, hispanic));
        }
    }
    Ok(out)
}

/// Counts, samples, or enumerates the ethnicity assignments of undetermined
/// prototypes that agree with the race-by-ethnicity marginals. Races are
/// independent, so the joint count is the product of per-race counts of
/// bounded compositions.
pub fn enumerate_ethnicity_assignments(partial: &PartialReconstruction, mode: AssignmentMode) -> Result<EthnicityAssignments> {
    let problems = problems(partial)?;
    match mode {
        AssignmentMode::Count => Ok(EthnicityAssignments::Count(
            problems.iter().map(|p| p.count().clone()).product(),
        )),
        AssignmentMode::Sample { seed: s, n } => {
            let mut rng = seed::rng(seed::derive(s, "ethnicity-sample", 0));
            let samples = (0..n)
                .map(|_| {
                    let mut a = EthnicityAssignment::new();
                    for p in &problems {
                        p.sample(&mut rng, &mut a);
                    }
                    a
                })
                .collect();
            Ok(EthnicityAssignments::Samples(samples))
        }
        AssignmentMode::Enumerate { limit } => {
            // Cartesian product of per-race enumerations, materialized per race.
            let mut combos: Vec<EthnicityAssignment> = vec![EthnicityAssignment::new()];
            let mut truncated = false;
            for p in &problems {
                let mut per_race: Vec<Vec<u64>> = Vec::new();
                let mut cap_hit = false;
                p.enumerate(0, p.hispanic as usize, &mut Vec::new(), &mut |xs| {
                    if per_race.len() >= limit {
                        cap_hit = true;
                        return false;
                    }
                    per_race.push(xs.to_vec());
                    true
                });
                truncated |= cap_hit;
                let mut next = Vec::new();
                'outer: for base in &combos {
                    for xs in &per_race {
                        if next.len() >= limit {
                            truncated = true;
                            break 'outer;
                        }
                        let mut a = base.clone();
                        for ((proto, _), &x) in p.cells.iter().zip(xs) {
                            a.insert(proto.clone(), x);
                        }
                        next.push(a);
                    }
                }
                combos = next;
            }
            combos.truncate(limit);
            Ok(EthnicityAssignments::Enumerated {
                assignments: combos,
                truncated,
            })
        }
    }
}

impl EthnicityAssignments {
    /// The count as `u64` when it fits (count mode only).
    pub fn count_u64(&self) -> Option<u64> {
        match self {
            EthnicityAssignments::Count(n) => n.to_u64(),
            _ => None,
        }
    }
}

impl PartialReconstruction {
    /// Replaces every undetermined prototype by its Hispanic and not-Hispanic
    /// parts according to `assignment`.
    pub fn resolve(&self, assignment: &EthnicityAssignment) -> Result<Histogram> {
        let mut out = Histogram::new(self.histogram.attrs());
        for (p, &n) in &self.histogram {
            if !is_undetermined(p) {
                out.add_unchecked(p.clone(), n);
                continue;
            }
            let x = assignment
                .get(p)
                .copied()
                .ok_or_else(|| Error::Infeasible(format!("no assignment for {p}")))?;
            if x > n {
                return Err(Error::Infeasible(format!("{x} Hispanic assigned to {p} of multiplicity {n}")));
            }
            out.add_unchecked(p.with(Attr::Hispanic, Value::Ethnicity(Ethnicity::Hispanic)), x);
            out.add_unchecked(p.with(Attr::Hispanic, Value::Ethnicity(Ethnicity::NotHispanic)), n - x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{GeoUnit, Sex};
    use crate::recon_diff::{Coverage, EthnicityMarginal, BLOCK_ATTRS};

    fn undetermined(age: u8) -> Prototype {
        Prototype::new(vec![
            (Attr::Sex, Value::Sex(Sex::Male)),
            (Attr::AgeBucket, Value::AgeRange(age, age)),
            (Attr::RaceGroup, Value::RaceGroup(RaceGroup::Black)),
            (Attr::Hispanic, Value::Ethnicity(Ethnicity::Undetermined)),
        ])
    }

    fn partial(cells: &[(u8, u64)], hispanic: u64) -> PartialReconstruction {
        let histogram =
            Histogram::from_counts(&BLOCK_ATTRS, cells.iter().map(|&(a, n)| (undetermined(a), n))).unwrap();
        PartialReconstruction {
            unit: GeoUnit::block(1, 1, 1, 1),
            coverage: Coverage {
                attrs: BTreeMap::new(),
                not_recovered: vec![],
            },
            exact: false,
            marginals: BTreeMap::from([(
                RaceGroup::Black,
                EthnicityMarginal {
                    total: histogram.total(),
                    hispanic,
                },
            )]),
            histogram,
        }
    }

    #[test]
    fn forced_assignment_counts_one() {
        let p = partial(&[(20, 3)], 3);
        let n = enumerate_ethnicity_assignments(&p, AssignmentMode::Count).unwrap();
        assert_eq!(n.count_u64(), Some(1));
    }

    #[test]
    fn bounded_two_cell_case() {
        let p = partial(&[(20, 2), (21, 1)], 1);
        assert_eq!(enumerate_ethnicity_assignments(&p, AssignmentMode::Count).unwrap().count_u64(), Some(2));
        let EthnicityAssignments::Enumerated { assignments, truncated } =
            enumerate_ethnicity_assignments(&p, AssignmentMode::Enumerate { limit: 10 }).unwrap()
        else {
            panic!()
        };
        assert!(!truncated);
        let got: Vec<Vec<u64>> = assignments.iter().map(|a| a.values().copied().collect()).collect();
        assert_eq!(got, vec![vec![0, 1], vec![1, 0]]);
        for a in &assignments {
            let h = p.resolve(a).unwrap();
            assert_eq!(h.total(), 3);
        }
    }

    #[test]
    fn infeasible_marginal() {
        let p = partial(&[(20, 2)], 5);
        assert!(matches!(
            enumerate_ethnicity_assignments(&p, AssignmentMode::Count),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn samples_are_consistent_and_seeded() {
        let p = partial(&[(20, 4), (21, 2), (22, 3)], 4);
        let mode = AssignmentMode::Sample { seed: 5, n: 50 };
        let EthnicityAssignments::Samples(s) = enumerate_ethnicity_assignments(&p, mode).unwrap() else {
            panic!()
        };
        assert_eq!(s.len(), 50);
        for a in &s {
            assert_eq!(a.values().sum::<u64>(), 4);
        }
        assert_eq!(enumerate_ethnicity_assignments(&p, mode).unwrap(), EthnicityAssignments::Samples(s));
    }

    #[test]
    fn enumeration_truncates() {
        let p = partial(&[(20, 4), (21, 4)], 4);
        let EthnicityAssignments::Enumerated { assignments, truncated } =
            enumerate_ethnicity_assignments(&p, AssignmentMode::Enumerate { limit: 3 }).unwrap()
        else {
            panic!()
        };
        assert_eq!(assignments.len(), 3);
        assert!(truncated);
    }
}
