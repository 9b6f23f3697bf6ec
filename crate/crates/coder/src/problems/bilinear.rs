//! The bilinear saddle toy `min_x max_y <x, y>` with each pair `(x_i, y_i)`
//! sharing a block. The unique solution is the origin; coordinate methods
//! without extrapolation diverge on it.

use super::{GmviProblem, PassState};
use crate::linalg::BlockPartition;

pub struct BilinearToy {
    pairs: usize,
    partition: BlockPartition,
}

/// `pairs` (x_i, y_i) pairs, interleaved: coordinates (2i, 2i+1) form block i.
pub fn make_bilinear_toy(pairs: usize) -> BilinearToy {
    assert!(pairs >= 1, "bilinear toy needs at least one pair");
    BilinearToy {
        pairs,
        partition: BlockPartition::new(vec![2; pairs]).expect("valid partition"),
    }
}

impl GmviProblem for BilinearToy {
    fn dim(&self) -> usize {
        2 * self.pairs
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn gamma(&self) -> f64 {
        0.0
    }

    fn full_operator(&self, z: &[f64], out: &mut [f64]) {
        for i in 0..self.pairs {
            out[2 * i] = z[2 * i + 1];
            out[2 * i + 1] = -z[2 * i];
        }
    }

    fn begin_pass(&self, z_prev: &[f64]) -> PassState {
        PassState::new(z_prev.to_vec(), Vec::new())
    }

    fn block_operator(&self, pass: &PassState, block: usize, out: &mut [f64]) {
        let z = pass.mixed();
        out[0] = z[2 * block + 1];
        out[1] = -z[2 * block];
    }

    fn commit_block(&self, pass: &mut PassState, block: usize, new_block: &[f64]) {
        let (mixed, _) = pass.parts();
        mixed[2 * block] = new_block[0];
        mixed[2 * block + 1] = new_block[1];
    }

    fn prox_block(&self, _block: usize, _z: &mut [f64], _tau: f64) {
        // g = 0: identity
    }

    fn g_value(&self, _z: &[f64]) -> f64 {
        0.0
    }

    /// Squared distance to the unique saddle at the origin; the saddle primal
    /// sup over the unbounded dual is infinite, so this is the merit the toy
    /// reports.
    fn primal_value(&self, z: &[f64]) -> f64 {
        crate::linalg::norm_sq(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_values() {
        let p = make_bilinear_toy(1);
        let mut out = vec![0.0; 2];
        p.full_operator(&[1.0, 1.0], &mut out);
        assert_eq!(out, vec![1.0, -1.0]);
        p.full_operator(&[0.0, 0.0], &mut out);
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn skew_symmetry() {
        use rand::{Rng, SeedableRng};
        let p = make_bilinear_toy(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut out = vec![0.0; 8];
        for _ in 0..50 {
            let z: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            p.full_operator(&z, &mut out);
            let inner: f64 = out.iter().zip(&z).map(|(f, zi)| f * zi).sum();
            assert_eq!(inner, 0.0, "<F(z), z> must vanish exactly");
        }
    }

    #[test]
    fn block_layout_interleaves_pairs() {
        let p = make_bilinear_toy(3);
        assert_eq!(p.partition().num_blocks(), 3);
        let pass = p.begin_pass(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut blk = vec![0.0; 2];
        p.block_operator(&pass, 1, &mut blk);
        assert_eq!(blk, vec![4.0, -3.0]);
    }
}
