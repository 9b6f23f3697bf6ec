//! The l1-regularized SVM in saddle form over stacked variables `(x, y)`:
//! `F(x, y) = (Abar^T y, -(Abar x - 1))` with `g = lambda ||x||_1` plus the
//! box indicator `[-1, 0]` on each dual coordinate. A sweep maintains both
//! `Abar x` and `Abar^T y`; blocks may mix primal and dual coordinates.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{GmviProblem, PassState, ProblemError};
use crate::linalg::{BlockPartition, CsrMatrix};
use crate::problems::separable::{CoordG, SeparableG};

pub struct L1Svm {
    abar: CsrMatrix,
    lambda: f64,
    g: SeparableG,
    partition: BlockPartition,
    flops: AtomicU64,
}

/// Builds the saddle-form SVM for a label-scaled matrix `Abar` (see
/// [`crate::dataio::build_svm_matrix`]). The partition covers the stacked
/// `d + n` coordinates; the primal block structure is unrestricted.
pub fn make_l1_svm(
    abar: CsrMatrix,
    lambda: f64,
    partition: BlockPartition,
) -> Result<L1Svm, ProblemError> {
    if lambda < 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let (n, d) = (abar.n_rows(), abar.n_cols());
    if partition.dim() != d + n {
        return Err(ProblemError::ShapeMismatch(format!(
            "partition covers {} coordinates but the stacked problem has {}",
            partition.dim(),
            d + n
        )));
    }
    let mut coords = vec![CoordG::L1 { lambda }; d];
    coords.extend(std::iter::repeat_n(
        CoordG::Interval { lo: -1.0, hi: 0.0 },
        n,
    ));
    Ok(L1Svm {
        abar,
        lambda,
        g: SeparableG::new(coords),
        partition,
        flops: AtomicU64::new(0),
    })
}

impl L1Svm {
    pub fn n_samples(&self) -> usize {
        self.abar.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.abar.n_cols()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.abar
    }

    fn count(&self, flops: u64) {
        self.flops.fetch_add(flops, Ordering::Relaxed);
    }

    /// Hinge-loss primal objective on the x-part of a stacked point.
    fn hinge_primal(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.abar.n_rows()];
        self.abar.matvec_into(x, &mut ax);
        let hinge: f64 = ax.iter().map(|&v| (1.0 - v).max(0.0)).sum();
        hinge + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

impl GmviProblem for L1Svm {
    fn dim(&self) -> usize {
        self.abar.n_cols() + self.abar.n_rows()
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn gamma(&self) -> f64 {
        0.0
    }

    fn full_operator(&self, z: &[f64], out: &mut [f64]) {
        let d = self.abar.n_cols();
        let (x, y) = z.split_at(d);
        let (out_x, out_y) = out.split_at_mut(d);
        self.abar.transpose_matvec_into(y, out_x);
        self.abar.matvec_into(x, out_y);
        for v in out_y.iter_mut() {
            *v = 1.0 - *v; // -(Abar x - 1)
        }
        self.count(2 * self.abar.nnz() as u64 + self.abar.n_rows() as u64);
    }

    fn begin_pass(&self, z_prev: &[f64]) -> PassState {
        let d = self.abar.n_cols();
        let (x, y) = z_prev.split_at(d);
        let mut ax = vec![0.0; self.abar.n_rows()];
        let mut aty = vec![0.0; d];
        self.abar.matvec_into(x, &mut ax);
        self.abar.transpose_matvec_into(y, &mut aty);
        self.count(2 * self.abar.nnz() as u64);
        PassState::new(z_prev.to_vec(), vec![ax, aty])
    }

    fn block_operator(&self, pass: &PassState, block: usize, out: &mut [f64]) {
        let d = self.abar.n_cols();
        let ax = pass.cache(0);
        let aty = pass.cache(1);
        for (k, c) in self.partition.range(block).enumerate() {
            out[k] = if c < d { aty[c] } else { 1.0 - ax[c - d] };
        }
    }

    fn commit_block(&self, pass: &mut PassState, block: usize, new_block: &[f64]) {
        let d = self.abar.n_cols();
        let range = self.partition.range(block);
        let (mixed, caches) = pass.parts();
        let mut flops = 0u64;
        for (k, c) in range.enumerate() {
            let delta = new_block[k] - mixed[c];
            if delta != 0.0 {
                if c < d {
                    self.abar.col_axpy(c, delta, &mut caches[0]);
                    flops += self.abar.col_nnz(c) as u64;
                } else {
                    let row = c - d;
                    self.abar.row_axpy(row, delta, &mut caches[1]);
                    flops += self.abar.row(row).0.len() as u64;
                }
            }
            mixed[c] = new_block[k];
        }
        self.count(flops);
    }

    fn prox_block(&self, block: usize, z: &mut [f64], tau: f64) {
        self.g.prox_range(self.partition.offset(block), z, tau);
    }

    fn g_value(&self, z: &[f64]) -> f64 {
        self.g.value(z)
    }

    fn primal_value(&self, z: &[f64]) -> f64 {
        self.hinge_primal(&z[..self.abar.n_cols()])
    }

    fn flop_count(&self) -> u64 {
        self.flops.load(Ordering::Relaxed)
    }
}
