use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coefficient at index {index}")]
    NonFinite { index: usize },

    #[error("coefficient sequence must have at least one entry")]
    EmptySequence,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("point {0} is outside [0, 1)")]
    OutOfDomain(f64),

    #[error("empty input")]
    EmptyInput,

    #[error("{draws} Monte Carlo draws requested; at least {min} required")]
    TooFewDraws { draws: usize, min: usize },

    #[error("gamma = {0} is outside (0, 0.5]")]
    InvalidGamma(f64),

    #[error("inflation factor {0} is below 1")]
    InvalidInflation(f64),

    #[error("invalid truth specification: {0}")]
    InvalidTruth(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
