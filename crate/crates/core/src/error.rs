use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WeaselError {
    #[error("invalid window length {window} for series of length {len}")]
    InvalidWindowLength { window: usize, len: usize },

    #[error("non-finite value at position {position}")]
    NonFinite { position: usize },

    #[error("empty time series")]
    EmptySeries,

    #[error("coefficient {0} is out of range")]
    CoefficientOutOfRange(String),

    #[error("need at least 2 non-empty groups, got {0}")]
    InsufficientGroups(usize),

    #[error("need at least 2 classes, got {0}")]
    InsufficientClasses(usize),

    #[error("empty partition")]
    EmptyPartition,

    #[error("split point {0} leaves one side empty")]
    InvalidSplit(f64),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("series of length {len} is shorter than the minimum window length {min}")]
    TooShort { len: usize, min: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported model format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, WeaselError>;
