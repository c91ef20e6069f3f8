use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::{discretize, optimize, Baseline, OptConfig, ReconProblem};
use super::relaxed::{Encoding, FeatureSpace};
use crate::datamodel::{Attr, Histogram, Prototype, Sex, Value};
use crate::error::{Error, Result};
use crate::tabulate::{sex_age_label, UnitTables, Workload};

impl ReconProblem {
    /// Builds the problem for one unit from its released tables. Every
    /// workload at the unit's level that is present in `tables` becomes part
    /// of the target vector; the row count is the published total.
    pub fn from_tables(tables: &UnitTables, workloads: &[Workload], encoding: Encoding) -> Result<ReconProblem> {
        let space = FeatureSpace::for_level(tables.unit.level, encoding)?;
        let used: Vec<Workload> = workloads
            .iter()
            .filter(|w| w.level == space.level && tables.get(&w.name).is_some())
            .cloned()
            .collect();
        let workload = space.compile(&used)?;
        let mut targets = Vec::with_capacity(workload.len());
        for w in &used {
            let t = tables.get(&w.name).expect("filtered above");
            if t.counts.len() != w.cells.len() {
                return Err(Error::InconsistentTables {
                    unit: tables.unit,
                    reason: format!("{} has {} counts for {} cells", w.name, t.counts.len(), w.cells.len()),
                });
            }
            targets.extend(t.counts.iter().map(|&c| c as f64));
        }
        let value = |table: &str, label: &str| -> Option<i64> {
            let w = workloads.iter().find(|w| w.name == table)?;
            tables.get(table)?.counts.get(w.cell_index(label)?).copied()
        };
        let prefix = if space.level == crate::datamodel::GeoLevel::Block { "P12" } else { "PCT12" };
        let total = value(prefix, "total")
            .or_else(|| value("P1", "total"))
            .ok_or_else(|| Error::Config(format!("{}: no published total population", tables.unit)))?;
        if total < 0 {
            return Err(Error::InconsistentTables {
                unit: tables.unit,
                reason: format!("negative total {total}"),
            });
        }
        Ok(ReconProblem {
            baseline: baseline_from_tables(&space, prefix, &value),
            space,
            workload,
            targets,
            n_rows: total as usize,
        })
    }
}

/// Public per-attribute marginals read off the sex-by-age table family.
fn baseline_from_tables(space: &FeatureSpace, prefix: &str, value: &dyn Fn(&str, &str) -> Option<i64>) -> Option<Baseline> {
    let mut counts = Vec::new();
    for f in &space.features {
        let c: Option<Vec<i64>> = match f.attr {
            Attr::Sex => Sex::ALL.iter().map(|s| value(prefix, s.label())).collect(),
            Attr::AgeBucket | Attr::AgeDetail => f
                .categories
                .iter()
                .map(|c| {
                    let (lo, hi) = match *c {
                        Value::Age(a) => (a, a),
                        Value::AgeRange(lo, hi) => (lo, hi),
                        _ => unreachable!(),
                    };
                    Sex::ALL.iter().map(|&s| value(prefix, &sex_age_label(s, lo, hi))).sum()
                })
                .collect(),
            Attr::RaceGroup => f
                .categories
                .iter()
                .map(|c| match c {
                    Value::RaceGroup(g) => value(&format!("{prefix}{}", g.letter()), "total"),
                    _ => unreachable!(),
                })
                .collect(),
            Attr::Hispanic => {
                let total = value(prefix, "total")?;
                let h = value(&format!("{prefix}H"), "total")?;
                Some(vec![total - h, h])
            }
            _ => None,
        };
        counts.push(c?.into_iter().map(|v| v.max(0) as f64).collect());
    }
    Some(Baseline::from_counts(counts))
}

/// One prototype of a ranked reconstruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// 1-based position.
    pub rank: usize,
    pub prototype: Prototype,
    /// Number of runs whose output contains the prototype.
    pub frequency: u64,
    /// Total multiplicity summed over all runs.
    pub occurrences: u64,
}

impl RankedEntry {
    /// Average multiplicity over the runs that contain the prototype.
    pub fn mean_multiplicity(&self) -> f64 {
        self.occurrences as f64 / self.frequency as f64
    }
}

/// Prototypes of `R` reconstructions ranked by how many runs produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedReconstruction {
    pub attrs: Vec<Attr>,
    pub runs: usize,
    pub entries: Vec<RankedEntry>,
    pub run_histograms: Vec<Histogram>,
    pub loss_trajectories: Vec<Vec<f64>>,
}

impl RankedReconstruction {
    /// Ranks the prototypes of a set of run outputs: descending frequency,
    /// then descending mean within-run multiplicity, then prototype order.
    pub fn from_runs(attrs: &[Attr], run_histograms: Vec<Histogram>, loss_trajectories: Vec<Vec<f64>>) -> Self {
        let mut tally: BTreeMap<Prototype, (u64, u64)> = BTreeMap::new();
        for h in &run_histograms {
            for (p, &n) in h {
                let e = tally.entry(p.clone()).or_default();
                e.0 += 1;
                e.1 += n;
            }
        }
        let mut entries: Vec<RankedEntry> = tally
            .into_iter()
            .map(|(prototype, (frequency, occurrences))| RankedEntry {
                rank: 0,
                prototype,
                frequency,
                occurrences,
            })
            .collect();
        entries.sort_by(compare_entries);
        for (i, e) in entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
        RankedReconstruction {
            attrs: Histogram::new(attrs).attrs().to_vec(),
            runs: run_histograms.len(),
            entries,
            run_histograms,
            loss_trajectories,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &Prototype) -> Option<&RankedEntry> {
        self.entries.iter().find(|e| &e.prototype == p)
    }

    pub fn top(&self, k: usize) -> &[RankedEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    /// Columns: `rank`, one per attribute, `frequency`, `occurrences`,
    /// `mean_multiplicity`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["rank".to_string()];
        header.extend(self.attrs.iter().map(|a| a.name().to_string()));
        header.extend(["frequency", "occurrences", "mean_multiplicity"].map(String::from));
        w.write_record(&header)?;
        for e in &self.entries {
            let mut row = vec![e.rank.to_string()];
            row.extend(e.prototype.pairs().iter().map(|(_, v)| v.to_string()));
            row.push(e.frequency.to_string());
            row.push(e.occurrences.to_string());
            row.push(format!("{:.6}", e.mean_multiplicity()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<ranked writer>", e))?;
        Ok(())
    }

    /// Reads the ranking written by [`RankedReconstruction::write_csv`]. Run
    /// histograms and loss trajectories are not part of that file.
    pub fn read_csv(reader: impl Read, runs: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (rank_col, freq_col, occ_col) = (col("rank")?, col("frequency")?, col("occurrences")?);
        let attr_cols: Vec<(usize, Attr)> = header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.parse::<Attr>().ok().map(|a| (i, a)))
            .collect();
        let attrs = Histogram::new(&attr_cols.iter().map(|&(_, a)| a).collect::<Vec<_>>()).attrs().to_vec();
        let mut entries = Vec::new();
        for (row_no, row) in r.records().enumerate() {
            let row = row?;
            let num = |i: usize| -> Result<u64> {
                row[i].parse().map_err(|_| Error::Malformed {
                    row: row_no + 1,
                    reason: format!("`{}` in column {} is not a count", &row[i], &header[i]),
                })
            };
            let pairs = attr_cols
                .iter()
                .map(|&(i, a)| Ok((a, Value::parse(a, &row[i])?)))
                .collect::<Result<Vec<_>>>()?;
            entries.push(RankedEntry {
                rank: num(rank_col)? as usize,
                prototype: Prototype::new(pairs),
                frequency: num(freq_col)?,
                occurrences: num(occ_col)?,
            });
        }
        Ok(RankedReconstruction {
            attrs,
            runs,
            entries,
            run_histograms: Vec::new(),
            loss_trajectories: Vec::new(),
        })
    }

    /// Long-format loss table: `run,iteration,loss`.
    pub fn write_loss_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["run", "iteration", "loss"])?;
        for (run, t) in self.loss_trajectories.iter().enumerate() {
            for (it, loss) in t.iter().enumerate() {
                w.write_record([run.to_string(), it.to_string(), format!("{loss:.9e}")])?;
            }
        }
        w.flush().map_err(|e| Error::io("<loss writer>", e))?;
        Ok(())
    }
}

fn compare_entries(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.frequency
        .cmp(&a.frequency)
        // a.occ / a.freq vs b.occ / b.freq, without rounding.
        .then_with(|| (b.occurrences as u128 * a.frequency as u128).cmp(&(a.occurrences as u128 * b.frequency as u128)))
        .then_with(|| a.prototype.cmp(&b.prototype))
}

/// `runs` independent optimize-and-discretize passes, run in parallel with
/// seeds `config.seed + run_index`, then ranked.
pub fn run_crr(problem: &ReconProblem, runs: usize, config: &OptConfig) -> Result<RankedReconstruction> {
    if runs == 0 {
        return Err(Error::Config("run_crr needs at least one run".into()));
    }
    config.validate()?;
    let outputs: Vec<(Histogram, Vec<f64>)> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let s = config.seed.wrapping_add(i as u64);
            let run = optimize(problem, config, s)?;
            Ok((discretize(&run.relaxed, config.discretize, s), run.trajectory))
        })
        .collect::<Result<_>>()?;
    let (hists, trajectories) = outputs.into_iter().unzip();
    Ok(RankedReconstruction::from_runs(&problem.space.attrs(), hists, trajectories))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Dataset, GeoLevel, PersonRecord, RaceGroup};
    use crate::tabulate::{block_workloads, tabulate};

    fn proto(sex: Sex, n: u8) -> Prototype {
        Prototype::new(vec![(Attr::Sex, Value::Sex(sex)), (Attr::AgeBucket, Value::AgeRange(n, n))])
    }

    fn hist(entries: &[(Prototype, u64)]) -> Histogram {
        Histogram::from_counts(&[Attr::Sex, Attr::AgeBucket], entries.iter().cloned()).unwrap()
    }

    #[test]
    fn ranking_order_and_tie_breaks() {
        let (a, b, c) = (proto(Sex::Male, 1), proto(Sex::Male, 2), proto(Sex::Female, 1));
        let runs = vec![
            hist(&[(a.clone(), 1), (b.clone(), 3), (c.clone(), 1)]),
            hist(&[(a.clone(), 1), (b.clone(), 1)]),
            hist(&[(c.clone(), 1), (a.clone(), 2)]),
        ];
        let r = RankedReconstruction::from_runs(&[Attr::Sex, Attr::AgeBucket], runs, vec![]);
        let order: Vec<(&Prototype, u64, u64)> = r.entries.iter().map(|e| (&e.prototype, e.frequency, e.occurrences)).collect();
        // a: 3 runs. b and c: 2 runs; b has the larger mean multiplicity.
        assert_eq!(order, vec![(&a, 3, 4), (&b, 2, 4), (&c, 2, 2)]);
        assert_eq!(r.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn csv_round_trip() {
        let runs = vec![hist(&[(proto(Sex::Male, 1), 2), (proto(Sex::Female, 3), 1)])];
        let r = RankedReconstruction::from_runs(&[Attr::Sex, Attr::AgeBucket], runs, vec![vec![3.0, 1.0]]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = RankedReconstruction::read_csv(buf.as_slice(), 1).unwrap();
        assert_eq!(back.entries, r.entries);
        let mut loss = Vec::new();
        r.write_loss_csv(&mut loss).unwrap();
        assert_eq!(String::from_utf8(loss).unwrap().lines().count(), 3);
    }

    fn identical_block(n: usize) -> Vec<UnitTables> {
        let records = vec![
            PersonRecord {
                state: 1,
                county: 1,
                tract: 100,
                block: 1000,
                hhgq: 0,
                sex: Sex::Female,
                age: 33,
                hispanic: false,
                race: 2,
            };
            n
        ];
        tabulate(&Dataset::census(records), &block_workloads())
    }

    #[test]
    fn single_run_frequencies_are_one() {
        let t = identical_block(6);
        let p = ReconProblem::from_tables(&t[0], &block_workloads(), Encoding::OneHot).unwrap();
        assert_eq!(p.n_rows, 6);
        let r = run_crr(&p, 1, &OptConfig { n_iterations: 20, ..OptConfig::default() }).unwrap();
        assert!(r.entries.iter().all(|e| e.frequency == 1));
        assert_eq!(r.run_histograms[0].total(), 6);
    }

    #[test]
    fn identical_people_rank_first_in_every_run() {
        let t = identical_block(8);
        let p = ReconProblem::from_tables(&t[0], &block_workloads(), Encoding::OneHot).unwrap();
        let config = OptConfig {
            n_iterations: 1000,
            ..OptConfig::default()
        };
        let r = run_crr(&p, 4, &config).unwrap();
        let truth = Prototype::new(vec![
            (Attr::Sex, Value::Sex(Sex::Female)),
            (Attr::AgeBucket, Value::AgeRange(30, 34)),
            (Attr::RaceGroup, Value::RaceGroup(RaceGroup::Black)),
            (Attr::Hispanic, Value::Ethnicity(crate::datamodel::Ethnicity::NotHispanic)),
        ]);
        assert_eq!(r.entries[0].prototype, truth);
        assert_eq!(r.entries[0].frequency, 4);
        assert_eq!(run_crr(&p, 4, &config).unwrap(), r);
        for t in &r.loss_trajectories {
            assert!(*t.last().unwrap() < 1e-3);
        }
    }

    #[test]
    fn baseline_read_from_tables() {
        let t = identical_block(5);
        let p = ReconProblem::from_tables(&t[0], &block_workloads(), Encoding::OneHot).unwrap();
        let b = p.baseline.unwrap();
        assert_eq!(b.0[0], vec![0.0, 1.0]);
        assert_eq!(b.0[2][RaceGroup::Black.index()], 1.0);
        assert_eq!(b.0[3], vec![1.0, 0.0]);
        assert_eq!(p.space.level, GeoLevel::Block);
    }
}
