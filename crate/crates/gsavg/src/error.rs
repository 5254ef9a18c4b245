use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },

    #[error("non-finite value at row {row}, column {column:?}")]
    NonFinite { row: usize, column: String },

    #[error("label column {0:?} not found")]
    LabelColumnNotFound(String),

    #[error("fewer than 2 distinct labels (found {found})")]
    TooFewLabels { found: usize },

    #[error("multi-class unsupported: found {found} distinct labels, expected 2")]
    MultiClass { found: usize },

    #[error("class {class} has {size} observation(s), need at least {min}")]
    ClassTooSmall { class: u8, size: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input contains NaN")]
    NanInput,

    #[error("input contains a non-finite value")]
    NonFiniteInput,

    #[error("negative argument {0} where a nonnegative value is required")]
    NegativeInput(f64),

    #[error("empty sample list")]
    EmptySamples,

    #[error("invalid blocking: {0}")]
    InvalidBlocking(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("percentile {0} outside [0, 1]")]
    PercentileOutOfRange(f64),

    #[error("training-data fingerprint mismatch: model was fit on different data")]
    FingerprintMismatch,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("replicate {rep} (seed {seed}) failed: {source}")]
    RepFailed {
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
