//! The dual-averaging coordinate solvers: CODER (cyclic coordinate dual
//! averaging with extrapolation), its parameter-free doubling variant, and
//! the PCCM / PRCM baselines obtained by dropping the extrapolation step.
//!
//! One iteration of the cyclic variants runs, for each block `i` in the
//! update order,
//!
//! ```text
//! p_k^i = F^i(mixed point)                       (new blocks before i, old after)
//! q_k^i = p_k^i + (a_{k-1}/a_k)(F^i(x_{k-1}) - p_{k-1}^i)    (extrapolation)
//! g_k^i = g_{k-1}^i + a_k q_k^i                  (dual accumulation)
//! x_k^i = prox_{A_k g^i}(x_0^i - g_k^i)          (lazy proximal step)
//! ```
//!
//! with step sizes `a_k = (1 + gamma A_{k-1}) / (2 L)`, `A_k = A_{k-1} + a_k`,
//! and returns both the last iterate and the weighted average
//! `(1/A_K) sum a_k x_k`.

mod run;

pub use run::solve;

use crate::linalg::Vector;
use crate::metrics::TraceRecord;
use thiserror::Error;

/// Which solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Cyclic coordinate dual averaging with extrapolation.
    Coder,
    /// CODER with the Lipschitz constant estimated by the doubling trick.
    CoderPf,
    /// Proximal cyclic coordinate method: CODER without extrapolation.
    Pccm,
    /// Proximal randomized coordinate method: uniformly sampled blocks,
    /// no extrapolation.
    Prcm,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Coder => "coder",
            Variant::CoderPf => "coder-pf",
            Variant::Pccm => "pccm",
            Variant::Prcm => "prcm",
        }
    }
}

/// Block update order across iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationPolicy {
    /// Natural order every iteration.
    Fixed,
    /// One seeded shuffle, reused every iteration.
    ShuffleOnce(u64),
    /// Fresh seeded shuffle before each iteration. Not admitted for the
    /// parameter-free variant, whose doubling argument assumes a fixed order.
    ShufflePerIteration(u64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Lipschitz constant `L`; the initial estimate `L_0` for [`Variant::CoderPf`].
    pub lipschitz: f64,
    /// Strong-convexity modulus used by the schedule; must not exceed the
    /// problem's own modulus.
    pub gamma: f64,
    pub max_iterations: usize,
    pub permutation: PermutationPolicy,
    /// Record trace rows every this many iterations (0: only at the end).
    pub trace_every: usize,
    /// Seed for PRCM block sampling.
    pub seed: u64,
    /// Iterates with any coordinate beyond this magnitude (or non-finite)
    /// abort the run with [`SolverError::Divergence`].
    pub divergence_threshold: f64,
    /// Hard cap for the doubling trick: the estimate may not exceed
    /// `lipschitz_cap_factor * L_0`.
    pub lipschitz_cap_factor: f64,
    /// Record per-iteration Lipschitz / estimation-sequence checks.
    pub collect_diagnostics: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant, lipschitz: f64, max_iterations: usize) -> Self {
        Self {
            variant,
            lipschitz,
            gamma: 0.0,
            max_iterations,
            permutation: PermutationPolicy::Fixed,
            trace_every: 0,
            seed: 0,
            divergence_threshold: 1e100,
            lipschitz_cap_factor: 1e12,
            collect_diagnostics: true,
        }
    }
}

/// Per-iteration diagnostics used by the certificate checks.
#[derive(Debug, Clone, Copy)]
pub struct IterationCheck {
    pub k: usize,
    /// `||F(x_k) - p_k||`: the left side of the Lipschitz pass inequality.
    /// NaN when the variant did not evaluate `F(x_k)`.
    pub lipschitz_residual: f64,
    /// `||x_k - x_{k-1}||`.
    pub step_distance: f64,
    /// The `L` in force this iteration (the accepted estimate for the
    /// parameter-free variant).
    pub accepted_l: f64,
    /// Attempts the doubling loop needed (always 1 for fixed-`L` variants).
    pub attempts: u32,
    /// Estimation-sequence bound at the reference point, when one was given:
    /// `psi_k(x_k; u) <= 0.5||u - x_0||^2 - (1 + gamma A_k)/2 ||u - x_k||^2`.
    pub lemma1_lhs: f64,
    pub lemma1_rhs: f64,
}

/// Outcome of a solver run.
#[derive(Debug)]
pub struct SolveResult {
    pub x_last: Vector,
    /// Weighted average `(1/A_K) sum a_k x_k` — the iterate carrying the
    /// sublinear gap guarantee.
    pub x_avg: Vector,
    pub iterations: usize,
    pub final_a: f64,
    /// Total failed Lipschitz checks (parameter-free variant only); equals
    /// the number of times the estimate was doubled past its warm start.
    pub doubling_count: u64,
    /// Full-operator-equivalent work consumed, in passes.
    pub passes: u64,
    pub trace: Vec<TraceRecord>,
    pub checks: Vec<IterationCheck>,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("x0 is outside dom(g)")]
    StartOutsideDomain,
    #[error("iterate diverged at iteration {iteration}")]
    Divergence {
        iteration: usize,
        partial: Box<SolveResult>,
    },
    #[error("Lipschitz estimate exceeded the cap {cap:.3e} at iteration {iteration}")]
    LipschitzCapExceeded { iteration: usize, cap: f64 },
}

impl SolverError {
    /// The partial result carried by a divergence error, if any.
    pub fn partial(&self) -> Option<&SolveResult> {
        match self {
            SolverError::Divergence { partial, .. } => Some(partial),
            _ => None,
        }
    }
}
