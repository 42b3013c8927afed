//! Error types for kernel evaluation and GP inference.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("input dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("length-scale must be strictly positive, got {value}")]
    NonPositiveLengthScale { value: f64 },
    #[error("variance must be non-negative and finite, got {value}")]
    InvalidVariance { value: f64 },
    #[error("points with ragged dimensions: expected {expected}, row {row} has {got}")]
    RaggedInput { expected: usize, row: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid training data: {0}")]
    Data(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("query dimension {got} does not match training dimension {expected}")]
    QueryDimension { expected: usize, got: usize },
    #[error("covariance factorization failed; attempted jitter levels {attempted:?}")]
    Factorization { attempted: Vec<f64> },
    #[error("all {restarts} restarts failed: {diagnostics:?}")]
    FitFailed { restarts: usize, diagnostics: Vec<String> },
}
