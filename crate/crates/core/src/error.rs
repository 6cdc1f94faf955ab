use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("design must have at least 2 rows and 1 column (got {rows}x{cols})")]
    TooSmall { rows: usize, cols: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid grid: {0}")]
    InvalidGridSpec(String),

    #[error("permutation is not a bijection on 0..{0}")]
    InvalidPermutation(usize),

    #[error("design has no columns")]
    EmptyDesign,

    #[error("selected columns {0:?} are rank deficient")]
    RankDeficient(Vec<usize>),

    #[error("invalid feature subset: {0}")]
    InvalidSubset(String),

    #[error("invalid fold count {folds} for {n} observations")]
    InvalidFoldCount { folds: usize, n: usize },

    #[error("invalid correlation {0}")]
    InvalidRho(f64),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("Cholesky factorization failed: covariance is not positive definite")]
    CholeskyFailure,
}

pub type Result<T> = std::result::Result<T, Error>;
