use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("numerical failure: {what} (residual {residual:e})")]
    NumericalFailure { what: String, residual: f64 },

    #[error("eigenvalue {eigenvalue:e} lies outside the domain of {function}")]
    Domain { function: &'static str, eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invariant violated: {invariant}: {detail}")]
    Invariant { invariant: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant { invariant, detail: detail.into() }
    }

    pub(crate) fn dims(detail: impl Into<String>) -> Self {
        Error::DimensionMismatch(detail.into())
    }
}
