//! Error type shared by all modules.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max-abs defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("not a valid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("map is not completely positive (min Choi eigenvalue {min_choi_eig:.3e})")]
    NotCompletelyPositive { min_choi_eig: f64 },

    #[error("negative rate {value} in channel {index}")]
    NegativeRate { index: usize, value: f64 },

    #[error("map is not invertible (condition number {cond:.3e})")]
    NotInvertible { cond: f64 },

    #[error("Laplace inversion failed: transform singular near u = {u}")]
    ContourPole { u: Complex64 },

    #[error("unsupported embedding: {reason}")]
    UnsupportedEmbedding { reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("JSON error: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
