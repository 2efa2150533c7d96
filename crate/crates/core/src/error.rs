//! Error types shared across the solver and harness modules.

use thiserror::Error;

/// Errors produced by model construction, posterior computation, and the solvers.
#[derive(Debug, Error)]
pub enum BsblError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The noiseless system matrix is rank deficient and cannot be factorized.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// A matrix required to be symmetric positive definite failed factorization.
    #[error("matrix not positive definite: {0}")]
    NonPsd(String),

    /// An AR(1) coefficient outside the open unit interval.
    #[error("invalid AR coefficient {0}: |r| must be < 1")]
    InvalidCoefficient(f64),

    /// Sensing column contains only zeros.
    #[error("sensing matrix column {0} is identically zero")]
    ZeroSensingColumn(usize),

    /// A sensing sub-matrix for one block contains only zeros.
    #[error("sensing sub-matrix for block {0} is identically zero")]
    ZeroSensingBlock(usize),

    /// Every block has been pruned; there is nothing to re-estimate from.
    #[error("no active blocks")]
    NoActiveBlocks,

    /// Window size outside 1..=N in the expanded model.
    #[error("invalid block size {h} for signal length {n}")]
    InvalidBlockSize { h: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, BsblError>;
