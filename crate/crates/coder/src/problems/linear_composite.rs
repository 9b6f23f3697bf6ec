//! Least-squares composite instances: `F(x) = A^T (A x - b)` with an l1 or
//! elastic-net regularizer. A sweep maintains the residual `r = A x - b`
//! incrementally, so committing block `i` costs the nonzeros of columns `S^i`.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{CompositeView, GmviProblem, PassState, ProblemError};
use crate::linalg::{BlockPartition, CsrMatrix};
use crate::problems::separable::{CoordG, SeparableG};

pub struct LinearComposite {
    a: CsrMatrix,
    b: Vec<f64>,
    g: SeparableG,
    l1: f64,
    l2: f64,
    partition: BlockPartition,
    flops: AtomicU64,
}

/// Lasso: `min 0.5 ||A x - b||^2 + lambda ||x||_1`.
pub fn make_lasso(
    a: CsrMatrix,
    b: Vec<f64>,
    lambda: f64,
    partition: BlockPartition,
) -> Result<LinearComposite, ProblemError> {
    if lambda < 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    LinearComposite::new(a, b, lambda, 0.0, partition)
}

/// Elastic net: `min 0.5 ||A x - b||^2 + l1 ||x||_1 + (l2/2) ||x||^2`,
/// strongly convex with modulus `l2 > 0`. Use [`make_lasso`] when `l2 = 0`.
pub fn make_elastic_net(
    a: CsrMatrix,
    b: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
    partition: BlockPartition,
) -> Result<LinearComposite, ProblemError> {
    if lambda1 < 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "lambda1 must be nonnegative, got {lambda1}"
        )));
    }
    if lambda2 <= 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "lambda2 must be positive (got {lambda2}); use make_lasso instead"
        )));
    }
    LinearComposite::new(a, b, lambda1, lambda2, partition)
}

impl LinearComposite {
    fn new(
        a: CsrMatrix,
        b: Vec<f64>,
        l1: f64,
        l2: f64,
        partition: BlockPartition,
    ) -> Result<Self, ProblemError> {
        if a.n_rows() != b.len() {
            return Err(ProblemError::ShapeMismatch(format!(
                "A has {} rows but b has length {}",
                a.n_rows(),
                b.len()
            )));
        }
        if a.n_cols() != partition.dim() {
            return Err(ProblemError::ShapeMismatch(format!(
                "A has {} columns but partition covers {}",
                a.n_cols(),
                partition.dim()
            )));
        }
        let g = if l2 > 0.0 {
            SeparableG::uniform(a.n_cols(), CoordG::L1Quad { l1, l2 })
        } else {
            SeparableG::uniform(a.n_cols(), CoordG::L1 { lambda: l1 })
        };
        Ok(Self {
            a,
            b,
            g,
            l1,
            l2,
            partition,
            flops: AtomicU64::new(0),
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    fn count(&self, flops: u64) {
        self.flops.fetch_add(flops, Ordering::Relaxed);
    }
}

impl GmviProblem for LinearComposite {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn gamma(&self) -> f64 {
        self.l2
    }

    fn full_operator(&self, x: &[f64], out: &mut [f64]) {
        let mut r = vec![0.0; self.a.n_rows()];
        self.a.matvec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        self.a.transpose_matvec_into(&r, out);
        self.count(2 * self.a.nnz() as u64 + self.a.n_rows() as u64);
    }

    fn begin_pass(&self, x_prev: &[f64]) -> PassState {
        let mut r = vec![0.0; self.a.n_rows()];
        self.a.matvec_into(x_prev, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        self.count(self.a.nnz() as u64 + self.a.n_rows() as u64);
        PassState::new(x_prev.to_vec(), vec![r])
    }

    fn block_operator(&self, pass: &PassState, block: usize, out: &mut [f64]) {
        let r = pass.cache(0);
        let mut flops = 0u64;
        for (k, c) in self.partition.range(block).enumerate() {
            out[k] = self.a.col_dot(c, r).expect("column index within range");
            flops += self.a.col_nnz(c) as u64;
        }
        self.count(flops);
    }

    fn commit_block(&self, pass: &mut PassState, block: usize, new_block: &[f64]) {
        let range = self.partition.range(block);
        let (mixed, caches) = pass.parts();
        let r = &mut caches[0];
        let mut flops = 0u64;
        for (k, c) in range.enumerate() {
            let delta = new_block[k] - mixed[c];
            if delta != 0.0 {
                self.a.col_axpy(c, delta, r);
                flops += self.a.col_nnz(c) as u64;
            }
            mixed[c] = new_block[k];
        }
        self.count(flops);
    }

    fn prox_block(&self, block: usize, z: &mut [f64], tau: f64) {
        self.g.prox_range(self.partition.offset(block), z, tau);
    }

    fn g_value(&self, x: &[f64]) -> f64 {
        self.g.value(x)
    }

    fn primal_value(&self, x: &[f64]) -> f64 {
        let mut r = vec![0.0; self.a.n_rows()];
        self.a.matvec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        0.5 * crate::linalg::norm_sq(&r) + self.g.value(x)
    }

    fn flop_count(&self) -> u64 {
        self.flops.load(Ordering::Relaxed)
    }

    fn composite_view(&self) -> Option<CompositeView<'_>> {
        Some(CompositeView {
            matrix: &self.a,
            rhs: &self.b,
            l1: self.l1,
            l2: self.l2,
        })
    }
}
