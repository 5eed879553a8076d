use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain `{0}` has no values")]
    EmptyDomain(String),
    #[error("domain `{domain}` is invalid: {reason}")]
    InvalidDomain { domain: String, reason: String },
    #[error("cartesian product has {available} elements, {requested} requested")]
    InsufficientProduct { available: u128, requested: usize },
    #[error("configuration id {id} is outside a space of {size}")]
    UnknownConfig { id: usize, size: usize },
    #[error("budget {budget} is not allowed for a space of {size} configurations")]
    BudgetExceedsSpace { budget: usize, size: usize },
    #[error("invalid count for `{what}`: {value}")]
    InvalidCount { what: &'static str, value: usize },

    #[error("quantile level {0} is outside (0, 1)")]
    InvalidQuantile(f64),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("model fitted at quantile {fitted}, queried at {requested}")]
    QuantileMismatch { fitted: f64, requested: f64 },
    #[error("invalid surrogate parameter: {0}")]
    InvalidTreeParams(String),

    #[error("nonconformity score set is empty")]
    EmptyScores,
    #[error("validation set is empty")]
    EmptyValidationSet,

    #[error("no unsampled configurations remain")]
    SpaceExhausted,
    #[error("history of {0} pairs is too small to split")]
    HistoryTooSmall(usize),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),

    #[error("configuration does not match the base model: {0}")]
    IncompatibleSpace(String),
    #[error("invalid hyperparameter `{name}`: {value}")]
    InvalidHyperparameter { name: String, value: f64 },

    #[error("experiment spec error in `{field}`: {message}")]
    SpecParse { field: String, message: String },
    #[error("no traces to summarize")]
    EmptyTraceSet,
    #[error("malformed trace file {path}: {message}")]
    MalformedTrace { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SpecParse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
