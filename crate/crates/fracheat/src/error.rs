//! Error types shared across the crate.

/// Errors produced by solver and fitting routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    /// The rational fit produced a pole or residue that violates the
    /// nonnegativity required for a stable lifted system.
    #[error("pole sign violation: {0}")]
    PoleSign(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("failed to converge: {0}")]
    NoConvergence(String),

    #[error("problem size {size} exceeds dense cap {cap}")]
    DenseCapExceeded { size: usize, cap: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
