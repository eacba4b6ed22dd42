use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("column `{0}` appears more than once in header")]
    AmbiguousColumn(String),

    #[error("label column must hold exactly 2 distinct values, found {found}: {values:?}")]
    LabelCount { found: usize, values: Vec<String> },

    #[error("minority label `{0}` does not occur in the label column")]
    UnknownMinorityLabel(String),

    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    BadCell { row: usize, column: String, value: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dataset must contain both classes (majority={majority}, minority={minority})")]
    SingleClass { majority: usize, minority: usize },

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    /// A parameter violates its contract (e.g. `beta < alpha`).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
