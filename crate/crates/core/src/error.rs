use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ring buffer overrun: {dropped} samples dropped (capacity {capacity}, buffered {buffered})")]
    Overrun {
        dropped: usize,
        capacity: usize,
        buffered: usize,
    },

    #[error("window has {actual} samples, expected {expected}")]
    WindowLength { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("layer {layer}: {detail}")]
    Layer { layer: usize, detail: String },

    #[error("bundle integrity check failed at {layer}: {detail}")]
    Integrity { layer: String, detail: String },

    #[error("front-end fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("malformed weight bundle: {0}")]
    Format(String),

    #[error("enrollment set is complete ({capacity} vectors); switch to inference")]
    EnrollmentComplete { capacity: usize },

    #[error("similarity undefined: {0}")]
    UndefinedSimilarity(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("memory budget exceeded: {total} B > limit {limit} B (largest: {offenders})")]
    BudgetExceeded {
        total: usize,
        limit: usize,
        offenders: String,
    },

    #[error("empty score list: {0}")]
    EmptyScores(&'static str),

    #[error("{path}: {reason}")]
    Audio { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
