//! Reduction of smooth convex-concave min-max problems to the GMVI form by
//! stacking the primal and dual variables and negating the dual gradient.

use super::{GmviProblem, PassState, ProblemError};
use crate::linalg::BlockPartition;
use crate::problems::separable::SeparableG;

/// Partial-gradient oracle: maps the stacked split `(x1, x2)` to a gradient
/// with respect to one of the two variable groups.
pub type GradOracle = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Optional saddle primal objective for reporting.
pub type PrimalOracle = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub struct MinMaxProblem {
    d1: usize,
    d2: usize,
    grad1: GradOracle,
    grad2: GradOracle,
    g: SeparableG,
    gamma: f64,
    partition: BlockPartition,
    primal: Option<PrimalOracle>,
}

/// Stacks `min_{x1} max_{x2} phi(x1, x2) + g1(x1) - g2(x2)` into a GMVI with
/// `F(x) = (grad_{x1} phi, -grad_{x2} phi)` and `g = g1 (+) g2`. The
/// regularizers must be coordinate-separable (every instance in this crate
/// is); `gamma1`, `gamma2` are their strong-convexity moduli and the stacked
/// problem carries the smaller one.
///
/// Oracle-backed instances are not coordinate-friendly: each block operator
/// evaluation costs a full gradient. Use the dedicated instances when the
/// structure allows incremental evaluation.
#[allow(clippy::too_many_arguments)]
pub fn reduce_min_max(
    d1: usize,
    d2: usize,
    grad1: GradOracle,
    grad2: GradOracle,
    g1: SeparableG,
    g2: SeparableG,
    partition: BlockPartition,
    primal: Option<PrimalOracle>,
) -> Result<MinMaxProblem, ProblemError> {
    if g1.dim() != d1 || g2.dim() != d2 {
        return Err(ProblemError::ShapeMismatch(format!(
            "regularizers cover ({}, {}) coordinates, expected ({d1}, {d2})",
            g1.dim(),
            g2.dim()
        )));
    }
    if partition.dim() != d1 + d2 {
        return Err(ProblemError::ShapeMismatch(format!(
            "partition covers {} coordinates, stacked dimension is {}",
            partition.dim(),
            d1 + d2
        )));
    }
    let gamma = g1.gamma().min(g2.gamma());
    let mut coords = Vec::with_capacity(d1 + d2);
    for c in 0..d1 {
        coords.push(g1.coord(c));
    }
    for c in 0..d2 {
        coords.push(g2.coord(c));
    }
    Ok(MinMaxProblem {
        d1,
        d2,
        grad1,
        grad2,
        g: SeparableG::new(coords),
        gamma,
        partition,
        primal,
    })
}

impl MinMaxProblem {
    fn eval(&self, z: &[f64], out: &mut [f64]) {
        let (x1, x2) = z.split_at(self.d1);
        let gx = (self.grad1)(x1, x2);
        let gy = (self.grad2)(x1, x2);
        debug_assert_eq!(gx.len(), self.d1);
        debug_assert_eq!(gy.len(), self.d2);
        out[..self.d1].copy_from_slice(&gx);
        for (o, v) in out[self.d1..].iter_mut().zip(&gy) {
            *o = -v;
        }
    }
}

impl GmviProblem for MinMaxProblem {
    fn dim(&self) -> usize {
        self.d1 + self.d2
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn full_operator(&self, z: &[f64], out: &mut [f64]) {
        self.eval(z, out);
    }

    fn begin_pass(&self, z_prev: &[f64]) -> PassState {
        PassState::new(z_prev.to_vec(), Vec::new())
    }

    fn block_operator(&self, pass: &PassState, block: usize, out: &mut [f64]) {
        let mut full = vec![0.0; self.dim()];
        self.eval(pass.mixed(), &mut full);
        for (k, c) in self.partition.range(block).enumerate() {
            out[k] = full[c];
        }
    }

    fn commit_block(&self, pass: &mut PassState, block: usize, new_block: &[f64]) {
        let range = self.partition.range(block);
        let (mixed, _) = pass.parts();
        mixed[range].copy_from_slice(new_block);
    }

    fn prox_block(&self, block: usize, z: &mut [f64], tau: f64) {
        self.g.prox_range(self.partition.offset(block), z, tau);
    }

    fn g_value(&self, z: &[f64]) -> f64 {
        self.g.value(z)
    }

    fn primal_value(&self, z: &[f64]) -> f64 {
        match &self.primal {
            Some(p) => p(z),
            None => f64::NAN,
        }
    }
}
