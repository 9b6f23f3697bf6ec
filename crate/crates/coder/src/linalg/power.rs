use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinalgError;

/// Start-vector seed used by callers that do not need to vary it. Fixing the
/// seed makes every spectral-norm estimate in the artifact reproducible.
pub const DEFAULT_POWER_SEED: u64 = 0x5eed_0001;

/// Outcome of a power-iteration run. When the Rayleigh quotient fails to
/// settle within the iteration budget, `converged` is false and `value`
/// carries the last estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator given
/// only as an apply callback, by power iteration with a seeded random start
/// and Rayleigh-quotient stopping.
///
/// Stops when successive Rayleigh quotients differ by at most
/// `tol * max(|estimate|, f64::MIN_POSITIVE)`.
pub fn spectral_norm<F>(
    mut apply: F,
    dim: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralEstimate, LinalgError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if tol <= 0.0 {
        return Err(LinalgError::InvalidStructure(
            "spectral_norm requires tol > 0".into(),
        ));
    }
    if dim == 0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = super::norm(&x);
    for v in &mut x {
        *v /= nrm;
    }
    let mut y = vec![0.0; dim];
    let mut estimate = 0.0f64;
    for it in 1..=max_iter {
        apply(&x, &mut y);
        let lambda = super::dot(&x, &y); // Rayleigh quotient, ||x|| = 1
        let ynorm = super::norm(&y);
        if ynorm == 0.0 {
            // operator annihilates the start vector; PSD top eigenvalue is 0
            return Ok(SpectralEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            });
        }
        let settled = (lambda - estimate).abs() <= tol * lambda.abs().max(f64::MIN_POSITIVE);
        estimate = lambda;
        if settled && it > 1 {
            return Ok(SpectralEstimate {
                value: estimate,
                iterations: it,
                converged: true,
            });
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ynorm;
        }
    }
    Ok(SpectralEstimate {
        value: estimate,
        iterations: max_iter,
        converged: false,
    })
}

/// Quadratic form `v^T Q v` through the same apply callback the rest of the
/// artifact uses, clamped to zero when a tiny negative value arises from
/// rounding on a PSD operator.
pub fn quad_form<F>(mut apply: F, v: &[f64]) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut qv = vec![0.0; v.len()];
    apply(v, &mut qv);
    let raw = super::dot(v, &qv);
    // floating-point negativity on true-zero forms
    const TOL_PSD: f64 = 1e-10;
    if (-TOL_PSD..0.0).contains(&raw) {
        0.0
    } else {
        raw
    }
}
