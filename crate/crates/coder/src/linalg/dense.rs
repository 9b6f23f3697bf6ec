use super::LinalgError;

/// Largest dimension admitted for dense square work matrices. The truncated
/// block-matrix sums are d x d, and everything in this artifact that needs
/// them runs at desk scale; anything larger must go through a matrix-free
/// path.
pub const DENSE_DIM_CAP: usize = 2048;

/// Row-major dense matrix with finite values, capped at [`DENSE_DIM_CAP`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Result<Self, LinalgError> {
        Self::zeros_with_cap(n_rows, n_cols, DENSE_DIM_CAP)
    }

    pub fn zeros_with_cap(
        n_rows: usize,
        n_cols: usize,
        cap: usize,
    ) -> Result<Self, LinalgError> {
        let dim = n_rows.max(n_cols);
        if dim > cap {
            return Err(LinalgError::DenseCapExceeded { dim, cap });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        })
    }

    /// Builds from row-major values.
    pub fn from_rows(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self, LinalgError> {
        if values.len() != n_rows * n_cols {
            return Err(LinalgError::DimensionMismatch {
                expected: n_rows * n_cols,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index });
        }
        let mut m = Self::zeros(n_rows, n_cols)?;
        m.values = values;
        Ok(m)
    }

    pub fn identity(dim: usize) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(dim, dim)?;
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.n_cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `y = M x` without allocation.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            y[r] = super::dot(self.row(r), x);
        }
    }

    /// `y = M^T x` without allocation.
    pub fn transpose_matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        y.fill(0.0);
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for (c, out) in y.iter_mut().enumerate() {
                *out += self.get(r, c) * xr;
            }
        }
    }

    /// `A^T A` of a dense `n x d` matrix, as a `d x d` Gram matrix.
    pub fn gram(&self) -> Result<Self, LinalgError> {
        let d = self.n_cols;
        let mut g = Self::zeros(d, d)?;
        for r in 0..self.n_rows {
            let row = self.row(r).to_vec();
            for i in 0..d {
                let vi = row[i];
                if vi == 0.0 {
                    continue;
                }
                for j in i..d {
                    let add = vi * row[j];
                    g.values[i * d + j] += add;
                }
            }
        }
        // mirror the upper triangle
        for i in 0..d {
            for j in 0..i {
                g.values[i * d + j] = g.values[j * d + i];
            }
        }
        Ok(g)
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}
