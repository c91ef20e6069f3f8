use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BlockSelection, RunConfig};
use super::manifest::{digest_tree, sha256_hex, Manifest, StageSeeds};
use crate::datamodel::{multiset_diff, Dataset, GeoLevel, GeoUnit, Histogram};
use crate::error::{Error, Result};
use crate::ingest::{export_microdata, generate_synthetic, load_microdata, sample_tracts, select_experiment_blocks, LoadOptions};
use crate::recon_diff::{
    enumerate_ethnicity_assignments, reconstruct_block, reconstruct_tract, AssignmentMode, EthnicityAssignments,
    TRACT_ATTRS,
};
use crate::recon_opt::{run_crr, RankedReconstruction, ReconProblem};
use crate::riskeval::{evaluate, scatter_points, write_scatter, FrequencyMode, UnitInput};
use crate::seed;
use crate::swap::{apply_swap, SwapReport};
use crate::tabulate::{check_consistency, read_tables, tabulate, write_tables, UnitTables, Violation, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Synth,
    Ingest,
    Swap,
    Tabulate,
    ReconDiff,
    ReconOpt,
    Eval,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Swap => "swap",
            Stage::Tabulate => "tabulate",
            Stage::ReconDiff => "recon-diff",
            Stage::ReconOpt => "recon-opt",
            Stage::Eval => "eval",
        }
    }
}

/// Command-line overrides applied on top of a [`RunConfig`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; `None` lets rayon decide.
    pub workers: Option<usize>,
    /// Treat table inconsistencies as errors instead of warnings.
    pub strict: bool,
}

/// Units chosen for the attacks, written by `tabulate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub tracts: Vec<GeoUnit>,
    pub blocks: Vec<GeoUnit>,
}

#[derive(Serialize)]
struct SwapSummary {
    enabled: bool,
    records: usize,
    n_at_risk: usize,
    n_selected: usize,
    n_swapped_pairs: usize,
    n_unmatched: usize,
    per_block: BTreeMap<GeoUnit, u64>,
}

#[derive(Serialize, Deserialize)]
struct TractDiffSummary {
    unit: GeoUnit,
    population: u64,
    prototypes: usize,
    exact: bool,
}

#[derive(Serialize, Deserialize)]
struct BlockDiffSummary {
    unit: GeoUnit,
    population: u64,
    prototypes: usize,
    undetermined_prototypes: usize,
    /// Consistent ethnicity assignments, as a decimal string (may exceed u64).
    ethnicity_assignments: String,
}

#[derive(Serialize, Deserialize)]
struct DiffSummary {
    tracts: Vec<TractDiffSummary>,
    blocks: Vec<BlockDiffSummary>,
}

#[derive(Serialize, Deserialize)]
struct OptUnit {
    unit: GeoUnit,
    seed: u64,
    rows: u64,
    runs: usize,
    prototypes: usize,
    mean_final_loss: f64,
}

#[derive(Serialize)]
struct DifferencingEval {
    unit: GeoUnit,
    population: u64,
    /// Reconstruction equals the protected (tabulated) data.
    matches_protected: bool,
    /// Records of the reconstruction also present in the pre-swap data.
    matched_original: u64,
    original_population: u64,
}

/// Runs stages against one output directory.
pub struct Pipeline {
    config: RunConfig,
    out: PathBuf,
    strict: bool,
    pool: rayon::ThreadPool,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(stage: Stage, path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|_| missing(stage, path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn missing(stage: Stage, path: &Path) -> Error {
    Error::StageInput {
        stage: stage.name().to_string(),
        path: path.to_path_buf(),
    }
}

fn require(stage: Stage, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(missing(stage, path))
    }
}

fn unit_name(u: &GeoUnit) -> String {
    u.to_string()
}

impl Pipeline {
    pub fn new(mut config: RunConfig, options: RunOptions) -> Result<Self> {
        if let Some(out) = options.out {
            config.out = out;
        }
        if let Some(s) = options.seed {
            config.seed = s;
        }
        config.validate()?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = options.workers {
            if n == 0 {
                return Err(Error::Config("--workers must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        Ok(Pipeline {
            out: config.out.clone(),
            config,
            strict: options.strict,
            pool,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn seeds(&self) -> StageSeeds {
        let s = self.config.seed;
        StageSeeds {
            synth: seed::derive(s, "synth", 0),
            swap: seed::derive(s, "swap", 0),
            tract_sample: seed::derive(s, "tract-sample", 0),
            crr: seed::derive(s, "crr", 0),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        self.pool.install(|| match stage {
            Stage::Synth => self.synth(),
            Stage::Ingest => self.ingest(),
            Stage::Swap => self.swap(),
            Stage::Tabulate => self.tabulate(),
            Stage::ReconDiff => self.recon_diff(),
            Stage::ReconOpt => self.recon_opt(),
            Stage::Eval => self.eval(),
        })
    }

    /// Every stage in order, then `manifest.json` and `timings.json`.
    pub fn run_all(&self) -> Result<Manifest> {
        let mut stages = Vec::new();
        if self.config.input.path.is_none() {
            stages.push(Stage::Synth);
        }
        stages.extend([
            Stage::Ingest,
            Stage::Swap,
            Stage::Tabulate,
            Stage::ReconDiff,
            Stage::ReconOpt,
            Stage::Eval,
        ]);
        let mut timings = BTreeMap::new();
        for &stage in &stages {
            let start = Instant::now();
            self.run(stage)?;
            timings.insert(stage.name(), start.elapsed().as_secs_f64());
        }
        let manifest = self.write_manifest(&stages)?;
        write_json(&self.path("timings.json"), &timings)?;
        Ok(manifest)
    }

    pub fn write_manifest(&self, stages: &[Stage]) -> Result<Manifest> {
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(self.config.canonical_toml()?.as_bytes()),
            seed: self.config.seed,
            seeds: self.seeds(),
            stages: stages.iter().map(|s| s.name().to_string()).collect(),
            artifacts: digest_tree(&self.out, &["manifest.json", "timings.json"])?,
        };
        write_json(&self.path("manifest.json"), &manifest)?;
        Ok(manifest)
    }

    pub fn synth(&self) -> Result<()> {
        let mut cfg = self.config.input.synth.clone();
        cfg.seed = self.seeds().synth;
        let data = generate_synthetic(&cfg)?;
        let dir = self.path("synth");
        create_dir(&dir)?;
        export_microdata(&data, dir.join("microdata.csv"), ',')
    }

    pub fn ingest(&self) -> Result<()> {
        let (src, opts) = match &self.config.input.path {
            Some(p) => (p.clone(), self.config.input.load.clone()),
            None => (self.path("synth/microdata.csv"), LoadOptions::default()),
        };
        require(Stage::Ingest, &src)?;
        let data = load_microdata(&src, &opts)?;
        let dir = self.path("ingest");
        create_dir(&dir)?;
        export_microdata(&data, dir.join("microdata.csv"), ',')
    }

    fn load_stage_data(&self, stage: Stage, rel: &str) -> Result<Dataset> {
        let path = self.path(rel);
        require(stage, &path)?;
        load_microdata(&path, &LoadOptions::default())
    }

    pub fn swap(&self) -> Result<()> {
        let data = self.load_stage_data(Stage::Swap, "ingest/microdata.csv")?;
        let (protected, report) = if self.config.swap.enabled {
            let mut params = self.config.swap.params.clone();
            params.seed = self.seeds().swap;
            apply_swap(&data, &params)?
        } else {
            (data, SwapReport::default())
        };
        let dir = self.path("swap");
        create_dir(&dir)?;
        export_microdata(&protected, dir.join("protected.csv"), ',')?;
        write_json(
            &dir.join("report.json"),
            &SwapSummary {
                enabled: self.config.swap.enabled,
                records: protected.len(),
                n_at_risk: report.n_at_risk,
                n_selected: report.n_selected,
                n_swapped_pairs: report.n_swapped_pairs,
                n_unmatched: report.n_unmatched,
                per_block: report.per_block,
            },
        )
    }

    fn selection(&self, data: &Dataset) -> Result<Selection> {
        let geo = &self.config.geography;
        let tracts = match geo.tract_sample {
            Some(n) => sample_tracts(data, n, self.seeds().tract_sample)?,
            None => data.unit_sizes(GeoLevel::Tract).into_keys().collect(),
        };
        let mut blocks = match geo.blocks {
            BlockSelection::Experiment => select_experiment_blocks(data),
            BlockSelection::All => data.unit_sizes(GeoLevel::Block).into_keys().collect(),
        };
        if let Some(m) = geo.max_blocks {
            blocks.truncate(m);
        }
        Ok(Selection { tracts, blocks })
    }

    fn report_violations(&self, violations: &[Violation]) -> Result<()> {
        let Some(first) = violations.first() else {
            return Ok(());
        };
        if self.strict {
            return Err(Error::InconsistentTables {
                unit: first.unit,
                reason: format!(
                    "{} violations, first in {} cell {}: expected {}, found {}",
                    violations.len(),
                    first.table,
                    first.cell,
                    first.expected,
                    first.actual
                ),
            });
        }
        eprintln!(
            "warning: {} table consistency violations (first: {} {} {})",
            violations.len(),
            first.unit,
            first.table,
            first.cell
        );
        Ok(())
    }

    pub fn tabulate(&self) -> Result<()> {
        let data = self.load_stage_data(Stage::Tabulate, "swap/protected.csv")?;
        let workloads = self.config.workloads.load()?;
        let tables = tabulate(&data, &workloads);
        let violations: Vec<Violation> = tables.iter().flat_map(|t| check_consistency(t, &workloads)).collect();
        let dir = self.path("tables");
        write_tables(&dir, &workloads, &tables)?;
        write_json(&dir.join("violations.json"), &violations)?;
        write_json(&dir.join("selection.json"), &self.selection(&data)?)?;
        self.report_violations(&violations)
    }

    fn load_tables(&self, stage: Stage) -> Result<(Vec<Workload>, BTreeMap<GeoUnit, UnitTables>, Selection)> {
        let dir = self.path("tables");
        let selection: Selection = read_json(stage, &dir.join("selection.json"))?;
        let workloads = self.config.workloads.load()?;
        let tables = read_tables(&dir, &workloads)?;
        let violations: Vec<Violation> = tables.iter().flat_map(|t| check_consistency(t, &workloads)).collect();
        self.report_violations(&violations)?;
        let tables = tables.into_iter().map(|t| (t.unit, t)).collect();
        Ok((workloads, tables, selection))
    }

    fn unit_tables<'a>(stage: Stage, tables: &'a BTreeMap<GeoUnit, UnitTables>, unit: &GeoUnit) -> Result<&'a UnitTables> {
        tables.get(unit).ok_or_else(|| Error::StageInput {
            stage: stage.name().to_string(),
            path: PathBuf::from(format!("tables for {unit}")),
        })
    }

    pub fn recon_diff(&self) -> Result<()> {
        let stage = Stage::ReconDiff;
        let (_, tables, selection) = self.load_tables(stage)?;
        let dir = self.path("recon_diff");
        create_dir(&dir.join("tracts"))?;
        create_dir(&dir.join("blocks"))?;
        let tracts = selection
            .tracts
            .par_iter()
            .map(|u| {
                let r = reconstruct_tract(Self::unit_tables(stage, &tables, u)?)?;
                r.write_csv(dir.join("tracts").join(format!("{}.csv", unit_name(u))))?;
                Ok(TractDiffSummary {
                    unit: *u,
                    population: r.population(),
                    prototypes: r.histogram.len(),
                    exact: r.exact,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let blocks = selection
            .blocks
            .par_iter()
            .map(|u| {
                let r = reconstruct_block(Self::unit_tables(stage, &tables, u)?)?;
                r.write_csv(dir.join("blocks").join(format!("{}.csv", unit_name(u))))?;
                let count = match enumerate_ethnicity_assignments(&r, AssignmentMode::Count)? {
                    EthnicityAssignments::Count(n) => n.to_string(),
                    _ => unreachable!("count mode returns a count"),
                };
                Ok(BlockDiffSummary {
                    unit: *u,
                    population: r.population(),
                    prototypes: r.histogram.len(),
                    undetermined_prototypes: r.undetermined().count(),
                    ethnicity_assignments: count,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        write_json(&dir.join("summary.json"), &DiffSummary { tracts, blocks })
    }

    fn crr_units(&self, selection: &Selection) -> Vec<GeoUnit> {
        match self.config.crr.level {
            GeoLevel::Tract => selection.tracts.clone(),
            _ => selection.blocks.clone(),
        }
    }

    pub fn recon_opt(&self) -> Result<()> {
        let stage = Stage::ReconOpt;
        let (workloads, tables, selection) = self.load_tables(stage)?;
        let crr = &self.config.crr;
        let dir = self.path("recon_opt");
        create_dir(&dir)?;
        let base = self.seeds().crr;
        let mut summaries = Vec::new();
        // Units run one after another; the runs inside each unit are parallel.
        for unit in self.crr_units(&selection) {
            let problem = ReconProblem::from_tables(Self::unit_tables(stage, &tables, &unit)?, &workloads, crr.opt.encoding)?;
            let mut opt = crr.opt.clone();
            opt.seed = seed::derive(base, &unit_name(&unit), 0);
            let ranked = run_crr(&problem, crr.runs, &opt)?;
            let udir = dir.join(unit_name(&unit));
            create_dir(&udir)?;
            let ranked_path = udir.join("ranked.csv");
            ranked.write_csv(BufWriter::new(File::create(&ranked_path).map_err(|e| Error::io(&ranked_path, e))?))?;
            let loss_path = udir.join("loss.csv");
            ranked.write_loss_csv(BufWriter::new(File::create(&loss_path).map_err(|e| Error::io(&loss_path, e))?))?;
            let finals: Vec<f64> = ranked.loss_trajectories.iter().filter_map(|t| t.last().copied()).collect();
            summaries.push(OptUnit {
                unit,
                seed: opt.seed,
                rows: problem.n_rows as u64,
                runs: crr.runs,
                prototypes: ranked.len(),
                mean_final_loss: finals.iter().sum::<f64>() / finals.len().max(1) as f64,
            });
        }
        write_json(&dir.join("units.json"), &summaries)
    }

    pub fn eval(&self) -> Result<()> {
        let stage = Stage::Eval;
        let units: Vec<OptUnit> = read_json(stage, &self.path("recon_opt/units.json"))?;
        let protected = self.load_stage_data(stage, "swap/protected.csv")?;
        let original = self.load_stage_data(stage, "ingest/microdata.csv")?;
        let mut ranked = Vec::with_capacity(units.len());
        let mut truths = Vec::with_capacity(units.len());
        for u in &units {
            let path = self.path(&format!("recon_opt/{}/ranked.csv", unit_name(&u.unit)));
            let file = File::open(&path).map_err(|_| missing(stage, &path))?;
            let r = RankedReconstruction::read_csv(BufReader::new(file), u.runs)?;
            truths.push(protected.project_unit(&r.attrs, &u.unit)?);
            ranked.push(r);
        }
        let inputs: Vec<UnitInput<'_>> = units
            .iter()
            .zip(ranked.iter().zip(&truths))
            .map(|(u, (r, t))| UnitInput {
                unit: u.unit,
                ranked: r,
                truth: t,
            })
            .collect();
        let report = evaluate(&inputs, &self.config.metrics)?;

        let dir = self.path("eval");
        create_dir(&dir.join("scatter"))?;
        let report_path = dir.join("report.json");
        report.write_json(BufWriter::new(File::create(&report_path).map_err(|e| Error::io(&report_path, e))?))?;
        let summary_path = dir.join("summary.txt");
        fs::write(&summary_path, report.summary()).map_err(|e| Error::io(&summary_path, e))?;
        for input in &inputs {
            let points = scatter_points(input.ranked, input.truth, FrequencyMode::Occurrences)?;
            let path = dir.join("scatter").join(format!("{}.csv", unit_name(&input.unit)));
            write_scatter(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?), &points)?;
        }

        let (_, tables, selection) = self.load_tables(stage)?;
        let diff = selection
            .tracts
            .par_iter()
            .map(|u| differencing_eval(Self::unit_tables(stage, &tables, u)?, &protected, &original))
            .collect::<Result<Vec<_>>>()?;
        write_json(&dir.join("differencing.json"), &diff)
    }
}

fn differencing_eval(tables: &UnitTables, protected: &Dataset, original: &Dataset) -> Result<DifferencingEval> {
    let unit = tables.unit;
    let recon = reconstruct_tract(tables)?.histogram;
    let truth = protected.project_unit(&TRACT_ATTRS, &unit)?;
    let before = original.project_unit(&TRACT_ATTRS, &unit)?;
    Ok(DifferencingEval {
        unit,
        population: recon.total(),
        matches_protected: multiset_diff(&recon, &truth)?.is_empty(),
        matched_original: overlap(&recon, &before),
        original_population: before.total(),
    })
}

/// Size of the multiset intersection.
fn overlap(a: &Histogram, b: &Histogram) -> u64 {
    a.iter().map(|(p, &n)| n.min(b.get(p))).sum()
}
