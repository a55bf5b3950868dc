use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimators, samplers, bound calculators and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty weight vector")]
    Empty,

    #[error("weight at index {index} is invalid: {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("weights do not sum to 1 (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("alphabet size must be at least 1")]
    ZeroAlphabet,

    #[error("counts sum to {actual} but total is {total}")]
    CountMismatch { actual: u64, total: u64 },

    #[error("estimator needs at least one observation")]
    NoObservations,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("theorem hypothesis n >= 10k violated (k = {k}, n = {n})")]
    HypothesisViolated { k: u64, n: u64 },

    #[error("failed to read distribution file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: cannot parse weight {text:?}")]
    Parse {
        path: PathBuf,
        line: usize,
        text: String,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
