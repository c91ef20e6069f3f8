//! Staged, manifest-tracked experiments.
//!
//! Each stage reads the previous stage's files from the output directory
//! and writes its own, so any stage can be rerun alone:
//!
//! | stage       | reads                              | writes |
//! |-------------|------------------------------------|--------|
//! | `synth`     | config                             | `synth/microdata.csv` |
//! | `ingest`    | `input.path` or `synth/`           | `ingest/microdata.csv` |
//! | `swap`      | `ingest/`                          | `swap/protected.csv`, `swap/report.json` |
//! | `tabulate`  | `swap/`                            | `tables/*.csv`, `tables/violations.json`, `tables/selection.json` |
//! | `recon-diff`| `tables/`                          | `recon_diff/{tracts,blocks}/*.csv`, `recon_diff/summary.json` |
//! | `recon-opt` | `tables/`                          | `recon_opt/<unit>/{ranked,loss}.csv`, `recon_opt/units.json` |
//! | `eval`      | `recon_opt/`, `tables/`, `swap/`, `ingest/` | `eval/*` |
//!
//! A full run also writes `manifest.json` (config hash, seeds, artifact
//! checksums; identical across reruns) and `timings.json`.

mod config;
mod manifest;
mod stages;

pub use config::{BlockSelection, CrrSection, GeographyConfig, InputConfig, RunConfig, SwapSection, WorkloadSelection};
pub use manifest::{ArtifactDigest, Manifest, StageSeeds};
pub use stages::{Pipeline, RunOptions, Selection, Stage};
