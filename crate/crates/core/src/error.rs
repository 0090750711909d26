use std::fmt;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coefficients are not in the probability simplex: {0}")]
    NotInSimplex(String),

    #[error("matrix is not a valid Gram matrix: {0}")]
    InvalidGram(String),

    #[error("problem exceeds oracle scale limits: {0}")]
    ScaleLimit(String),

    #[error("filtration integrity violated: {0}")]
    Integrity(String),

    #[error("face {face:?} (value {face_value}) comes after simplex {simplex:?} (value {simplex_value})")]
    NotMonotone {
        face: Vec<usize>,
        face_value: f64,
        simplex: Vec<usize>,
        simplex_value: f64,
    },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidParameter(msg.to_string())
    }

    pub(crate) fn parse(msg: impl fmt::Display) -> Self {
        Error::Parse(msg.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
