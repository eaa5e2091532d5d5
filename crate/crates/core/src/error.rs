use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no data rows")]
    NoData,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("class {class}: requested {requested} samples but only {available} available")]
    InsufficientSamples {
        class: String,
        requested: usize,
        available: usize,
    },

    #[error("mixture weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("class {class} is missing from {fold}")]
    EmptyFold { class: String, fold: &'static str },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
