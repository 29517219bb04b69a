//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the linear algebra, selection, and benchmark layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in input: {0}")]
    NonFinite(String),

    #[error("matrix not positive definite: smallest pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("degenerate filter: {0}")]
    DegenerateFilter(String),

    #[error("invalid sensor set: {0}")]
    InvalidSensorSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver diverged at iteration {iter}")]
    SolverDiverged { iter: usize },

    #[error("problem infeasible")]
    Infeasible,

    #[error("selection not found: {0}")]
    NotFound(String),

    #[error("subset count {count} exceeds cap {cap}; use a heuristic method")]
    SubsetCapExceeded { count: u128, cap: u128 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
