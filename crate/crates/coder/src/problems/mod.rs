//! The GMVI problem abstraction: a monotone operator `F` with blockwise
//! incremental evaluation plus a separable `g` with per-block proximal
//! operators, and the concrete instances used throughout the benchmarks.

mod bilinear;
mod linear_composite;
mod minmax;
mod separable;
mod svm;

pub use bilinear::{make_bilinear_toy, BilinearToy};
pub use linear_composite::{make_elastic_net, make_lasso, LinearComposite};
pub use minmax::{reduce_min_max, GradOracle, MinMaxProblem, PrimalOracle};
pub use separable::{soft_threshold, CoordG, SeparableG};
pub use svm::{make_l1_svm, L1Svm};

use crate::linalg::{BlockPartition, CsrMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Mutable per-run evaluation state for one cyclic pass (and, for the
/// randomized baseline, for a whole run). Holds the current mixed iterate
/// and whatever residual vectors the owning problem maintains incrementally;
/// the layout of `caches` is private to each problem implementation.
#[derive(Debug, Clone)]
pub struct PassState {
    mixed: Vec<f64>,
    caches: Vec<Vec<f64>>,
}

impl PassState {
    pub(crate) fn new(mixed: Vec<f64>, caches: Vec<Vec<f64>>) -> Self {
        Self { mixed, caches }
    }

    /// The mixed iterate: blocks committed so far hold new values, the rest
    /// still hold the values the pass started from.
    pub fn mixed(&self) -> &[f64] {
        &self.mixed
    }

    pub fn into_mixed(self) -> Vec<f64> {
        self.mixed
    }

    pub(crate) fn parts(&mut self) -> (&mut Vec<f64>, &mut Vec<Vec<f64>>) {
        (&mut self.mixed, &mut self.caches)
    }

    pub(crate) fn cache(&self, i: usize) -> &[f64] {
        &self.caches[i]
    }
}

/// Read-only view of the data behind a linear composite instance
/// (`F(x) = A^T (A x - b)`), used by reference computation to run an
/// independent coordinate-descent cross-check.
pub struct CompositeView<'a> {
    pub matrix: &'a CsrMatrix,
    pub rhs: &'a [f64],
    pub l1: f64,
    pub l2: f64,
}

/// A generalized Minty variational inequality instance.
///
/// `begin_pass` / `block_operator` / `commit_block` implement one cyclic
/// sweep: after committing blocks `i_1, .., i_{r-1}`, `block_operator` for
/// the next block returns `F` restricted to that block, evaluated at the
/// mixed point (committed blocks new, remaining blocks old). A full sweep
/// costs the same order of work as one `full_operator` call on the
/// coordinate-friendly instances.
pub trait GmviProblem: Send + Sync {
    fn dim(&self) -> usize;

    fn partition(&self) -> &BlockPartition;

    /// Strong-convexity modulus of `g` (0 when merely convex).
    fn gamma(&self) -> f64;

    /// `out = F(x)`.
    fn full_operator(&self, x: &[f64], out: &mut [f64]);

    /// Starts a sweep at `x_prev`, building the maintained residuals from
    /// scratch.
    fn begin_pass(&self, x_prev: &[f64]) -> PassState;

    /// `F` restricted to `block`, at the current mixed point.
    fn block_operator(&self, pass: &PassState, block: usize, out: &mut [f64]);

    /// Replaces `block` of the mixed point with `new_block`, updating the
    /// maintained residuals incrementally.
    fn commit_block(&self, pass: &mut PassState, block: usize, new_block: &[f64]);

    /// In-place proximal step for the block component of `g`:
    /// `z := argmin_w { tau * g^i(w) + 0.5 ||w - z||^2 }`. `tau = 0` is the
    /// identity.
    fn prox_block(&self, block: usize, z: &mut [f64], tau: f64);

    /// `g(x)`; `f64::INFINITY` outside the domain.
    fn g_value(&self, x: &[f64]) -> f64;

    /// Primal objective for composite problems, or the saddle primal value
    /// for min-max instances. `NaN` when the instance defines none.
    fn primal_value(&self, x: &[f64]) -> f64;

    /// Multiply-add count consumed by operator evaluations so far; the
    /// instrumentation behind the coordinate-friendliness checks. Instances
    /// that do not track work return 0.
    fn flop_count(&self) -> u64 {
        0
    }

    /// Access to the linear-composite data when this instance is one.
    fn composite_view(&self) -> Option<CompositeView<'_>> {
        None
    }
}
