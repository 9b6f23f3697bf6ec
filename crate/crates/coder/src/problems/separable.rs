//! Coordinate-separable convex regularizers with closed-form proximal steps.

/// Per-coordinate piece of a separable `g`. Every instance in this crate is
/// built from these; blocks may freely mix different pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordG {
    /// g(z) = 0
    Zero,
    /// g(z) = lambda * |z|
    L1 { lambda: f64 },
    /// g(z) = l1 * |z| + (l2 / 2) * z^2
    L1Quad { l1: f64, l2: f64 },
    /// indicator of [lo, hi]
    Interval { lo: f64, hi: f64 },
}

// Feasibility slack for interval membership: weighted averages of feasible
// iterates can drift out of the box by a rounding epsilon.
const INTERVAL_SLACK: f64 = 1e-9;

impl CoordG {
    /// prox_{tau g}(z); ties at the soft-threshold kink resolve to 0.
    #[inline]
    pub fn prox(self, z: f64, tau: f64) -> f64 {
        match self {
            CoordG::Zero => z,
            CoordG::L1 { lambda } => soft_threshold(z, tau * lambda),
            CoordG::L1Quad { l1, l2 } => soft_threshold(z, tau * l1) / (1.0 + tau * l2),
            CoordG::Interval { lo, hi } => z.clamp(lo, hi),
        }
    }

    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            CoordG::Zero => 0.0,
            CoordG::L1 { lambda } => lambda * z.abs(),
            CoordG::L1Quad { l1, l2 } => l1 * z.abs() + 0.5 * l2 * z * z,
            CoordG::Interval { lo, hi } => {
                if z >= lo - INTERVAL_SLACK && z <= hi + INTERVAL_SLACK {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Strong-convexity modulus contributed by this piece.
    pub fn gamma(self) -> f64 {
        match self {
            CoordG::L1Quad { l2, .. } => l2,
            _ => 0.0,
        }
    }
}

/// g(z) = sign(z) * max(|z| - t, 0)
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// A coordinate-separable `g` over a fixed dimension.
#[derive(Debug, Clone)]
pub struct SeparableG {
    coords: Vec<CoordG>,
}

impl SeparableG {
    pub fn new(coords: Vec<CoordG>) -> Self {
        Self { coords }
    }

    pub fn uniform(dim: usize, g: CoordG) -> Self {
        Self {
            coords: vec![g; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, c: usize) -> CoordG {
        self.coords[c]
    }

    /// Modulus of the whole function: the smallest per-coordinate modulus.
    pub fn gamma(&self) -> f64 {
        self.coords
            .iter()
            .map(|g| g.gamma())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.coords.len());
        let mut acc = 0.0;
        for (g, &z) in self.coords.iter().zip(x) {
            let v = g.value(z);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += v;
        }
        acc
    }

    /// Value restricted to a coordinate range.
    pub fn value_range(&self, start: usize, x_block: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, &z) in x_block.iter().enumerate() {
            let v = self.coords[start + k].value(z);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += v;
        }
        acc
    }

    pub fn prox_range(&self, start: usize, z: &mut [f64], tau: f64) {
        for (k, zi) in z.iter_mut().enumerate() {
            *zi = self.coords[start + k].prox(*zi, tau);
        }
    }
}
