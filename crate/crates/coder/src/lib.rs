//! CODER: cyclic coordinate dual averaging with extrapolation for generalized
//! (Minty) variational inequalities, together with baseline coordinate methods
//! (PCCM, PRCM), a parameter-free variant based on the doubling trick, block
//! Lipschitz-constant machinery, problem instances (Lasso, elastic net,
//! l1-regularized SVM, bilinear games), and convergence certificates.
//!
//! The solver addresses problems of the form: find `x*` such that
//! `<F(x), x - x*> + g(x) - g(x*) >= 0` for all `x`, where `F` is a monotone
//! Lipschitz operator with coordinate-friendly structure and `g` is a
//! block-separable convex function with cheap per-block proximal operators.

#![allow(clippy::needless_range_loop)]

pub mod dataio;
pub mod linalg;
pub mod lipschitz;
pub mod metrics;
pub mod problems;
pub mod solvers;

pub use linalg::{BlockPartition, CsrMatrix, DenseMatrix, Vector};
pub use problems::GmviProblem;
pub use solvers::{solve, SolveResult, SolverConfig, Variant};
