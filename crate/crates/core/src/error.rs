use thiserror::Error;

/// Errors raised by the numerical kernels and selection algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("numerically singular: {0}")]
    Singular(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("iteration did not converge: {0}")]
    Convergence(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("sampling produced {distinct} distinct indices, need {needed}; resample with another seed or larger s")]
    Resample { distinct: usize, needed: usize },

    #[error("index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
