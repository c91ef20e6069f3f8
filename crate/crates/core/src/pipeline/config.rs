use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datamodel::GeoLevel;
use crate::error::{Error, Result};
use crate::ingest::{LoadOptions, SynthConfig};
use crate::recon_opt::{FeatureSpace, OptConfig};
use crate::riskeval::EvalConfig;
use crate::swap::SwapConfig;
use crate::tabulate::{builtin_workloads, Workload, WorkloadFile};

/// Full description of an experiment. Every field has a default, so an empty
/// TOML file is a valid configuration.
///
/// Nested `seed` fields are ignored by the pipeline: each stage derives its
/// own seed from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub input: InputConfig,
    pub swap: SwapSection,
    pub geography: GeographyConfig,
    pub workloads: WorkloadSelection,
    pub crr: CrrSection,
    pub metrics: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            input: InputConfig::default(),
            swap: SwapSection::default(),
            geography: GeographyConfig::default(),
            workloads: WorkloadSelection::default(),
            crr: CrrSection::default(),
            metrics: EvalConfig::default(),
        }
    }
}

/// Where the microdata comes from. Without `path` the synthetic generator is used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub load: LoadOptions,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapSection {
    pub enabled: bool,
    pub params: SwapConfig,
}

impl Default for SwapSection {
    fn default() -> Self {
        SwapSection {
            enabled: true,
            params: SwapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSelection {
    /// Mean-size, largest, and `M / C` blocks per state.
    #[default]
    Experiment,
    All,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeographyConfig {
    /// Number of tracts to sample for tract-level attacks; `None` keeps all.
    pub tract_sample: Option<usize>,
    pub blocks: BlockSelection,
    /// Upper bound on attacked blocks, applied after selection in unit order.
    pub max_blocks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSelection {
    /// TOML workload file replacing the built-in tables.
    pub file: Option<PathBuf>,
}

impl WorkloadSelection {
    pub fn load(&self) -> Result<Vec<Workload>> {
        match &self.file {
            None => {
                let mut all = builtin_workloads(GeoLevel::Tract);
                all.extend(builtin_workloads(GeoLevel::Block));
                Ok(all)
            }
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                WorkloadFile::from_toml(&text)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrrSection {
    pub level: GeoLevel,
    pub runs: usize,
    pub opt: OptConfig,
}

impl Default for CrrSection {
    fn default() -> Self {
        CrrSection {
            level: GeoLevel::Block,
            runs: 20,
            opt: OptConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.path.is_none() {
            self.input.synth.validate()?;
        }
        self.swap.params.validate()?;
        self.crr.opt.validate()?;
        self.metrics.validate()?;
        if self.crr.runs == 0 {
            return Err(Error::Config("crr.runs must be at least 1".into()));
        }
        if self.geography.tract_sample == Some(0) {
            return Err(Error::Config("geography.tract_sample must be at least 1".into()));
        }
        let space = FeatureSpace::for_level(self.crr.level, self.crr.opt.encoding)?;
        let attrs = space.attrs();
        for a in self.metrics.qi_attrs.iter().chain(&self.metrics.conf_attrs) {
            if !attrs.contains(a) {
                return Err(Error::Config(format!(
                    "metrics attribute `{a}` is not reconstructed at {:?} level",
                    self.crr.level
                )));
            }
        }
        Ok(())
    }

    /// Canonical TOML of everything that affects results. The output
    /// directory is excluded so relocated runs hash identically.
    pub fn canonical_toml(&self) -> Result<String> {
        let mut c = self.clone();
        c.out = PathBuf::new();
        toml::to_string(&c).map_err(|e| Error::Config(e.to_string()))
    }
}
