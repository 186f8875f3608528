use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-numeric value {value:?} in column {column} (row {row})")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: linear predictor {value} outside [{lower}, {upper}]")]
    Domain { value: f64, lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank deficient design: smallest Gram eigenvalue {0} is not positive")]
    RankDeficient(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("criterion {criterion} undefined: {reason}")]
    CriterionUndefined { criterion: String, reason: String },

    #[error("too many failed bootstrap replicates: {failed} of {total}")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
