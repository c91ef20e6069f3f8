use std::path::PathBuf;

use crate::datamodel::GeoUnit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("incomparable histograms: {left:?} vs {right:?}")]
    Incomparable { left: Vec<String>, right: Vec<String> },

    #[error("row {row}: value {value:?} is outside the domain of column `{column}`")]
    Domain {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: malformed record: {reason}")]
    Malformed { row: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot sample {requested} items from {available}")]
    Sampling { requested: usize, available: usize },

    #[error("inconsistent tables for {unit}: {reason}")]
    InconsistentTables { unit: GeoUnit, reason: String },

    #[error("infeasible ethnicity marginals: {0}")]
    Infeasible(String),

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("stage `{stage}` is missing its input {}", path.display())]
    StageInput { stage: String, path: PathBuf },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
