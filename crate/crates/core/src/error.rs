//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, inference, and prediction.
#[derive(Debug, Error)]
pub enum CbError {
    /// A label fell outside `1..=K`.
    #[error("label {label} out of range 1..={k}")]
    InvalidLabel { label: usize, k: usize },

    /// Matrix or vector dimensions do not conform.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A covariance matrix was not symmetric positive definite.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// An SPD factorization or solve broke down during inference.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A simulation or featurization specification was rejected.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Input data failed validation (non-finite entries, empty, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),
}

pub type Result<T> = std::result::Result<T, CbError>;
