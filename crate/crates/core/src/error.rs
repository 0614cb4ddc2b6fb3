use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema: {0}")]
    Schema(String),

    #[error("data: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: model expects {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains a single label class")]
    SingleClass,

    #[error("causal effect undefined: no rows with {feature} = {value}")]
    UndefinedEffect { feature: String, value: u8 },

    #[error("experiment: {0}")]
    Experiment(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from bad input data or configuration rather
    /// than from a failure while running the pipeline.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Csv(_) | Error::Schema(_) | Error::Data(_) | Error::InvalidArgument(_)
        )
    }
}
