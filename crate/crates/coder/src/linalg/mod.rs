//! Dense/sparse linear algebra primitives shared by the problem instances,
//! the Lipschitz-constant machinery, and the solvers.

mod csr;
mod dense;
mod partition;
mod power;
mod vector;

pub use csr::CsrMatrix;
pub use dense::{DenseMatrix, DENSE_DIM_CAP};
pub use partition::BlockPartition;
pub use power::{quad_form, spectral_norm, SpectralEstimate, DEFAULT_POWER_SEED};
pub use vector::Vector;

use thiserror::Error;

/// Errors from constructing or combining linear-algebra objects.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("invalid block partition: {0}")]
    InvalidPartition(String),
    #[error("dense dimension {dim} exceeds cap {cap}; use a matrix-free path")]
    DenseCapExceeded { dim: usize, cap: usize },
}

/// Euclidean inner product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared Euclidean norm.
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}
