use thiserror::Error;

/// Errors raised by the matrix routines and the classifiers built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is numerically singular in {op}")]
    SingularMatrix { op: &'static str },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {n} exceeds the supported maximum {max} for {op}")]
    DimensionTooLarge {
        n: usize,
        max: usize,
        op: &'static str,
    },

    #[error("matrix has a zero off-diagonal entry at ({row}, {col})")]
    HasZeroEntry { row: usize, col: usize },

    #[error("1 + sigma * G({k},{k}) vanishes at sigma = {sigma}")]
    PoleAtSigma { sigma: f64, k: usize },

    #[error("pivot row/column has a zero entry at ({row}, {col})")]
    ZeroPivotEntry { row: usize, col: usize },

    #[error("block {block} of the partition is singular")]
    SingularBlock { block: &'static str },

    #[error("matrix is not symmetric: |G({row},{col}) - G({col},{row})| = {gap}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("matrix is not positive semidefinite (residual diagonal {value})")]
    NotPsd { value: f64 },

    #[error("det(I + alpha G) = {det} is not positive")]
    NonpositiveDeterminant { det: f64 },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
