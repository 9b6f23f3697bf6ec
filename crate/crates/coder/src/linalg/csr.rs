use std::sync::OnceLock;

use super::LinalgError;

/// Compressed sparse row matrix with finite values. A compressed sparse
/// column view is built lazily and cached, so both row access (operator
/// evaluation) and column access (coordinate updates) are cheap.
#[derive(Debug)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    csc: OnceLock<CscArrays>,
}

#[derive(Debug)]
struct CscArrays {
    col_offsets: Vec<usize>,
    row_indices: Vec<usize>,
    values: Vec<f64>,
}

impl Clone for CsrMatrix {
    fn clone(&self) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.clone(),
            csc: OnceLock::new(),
        }
    }
}

impl CsrMatrix {
    /// Builds a CSR matrix, validating the structural invariants: offsets
    /// monotone with length `n_rows + 1`, column indices in range, values
    /// finite, and indices ascending within each row.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if row_offsets.len() != n_rows + 1 {
            return Err(LinalgError::InvalidStructure(format!(
                "row_offsets length {} != n_rows + 1 = {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(LinalgError::InvalidStructure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(LinalgError::InvalidStructure(
                "col_indices and values length mismatch".into(),
            ));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(LinalgError::InvalidStructure(
                "row_offsets not monotone".into(),
            ));
        }
        for r in 0..n_rows {
            let row = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidStructure(format!(
                    "row {r} has non-ascending column indices"
                )));
            }
            if row.last().is_some_and(|&c| c >= n_cols) {
                return Err(LinalgError::InvalidStructure(format!(
                    "row {r} has column index out of range"
                )));
            }
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            csc: OnceLock::new(),
        })
    }

    /// Builds from a list of `(row, col, value)` triplets (must not contain
    /// duplicate positions).
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, LinalgError> {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &(r, c, v) in &triplets {
            if r >= n_rows {
                return Err(LinalgError::IndexOutOfRange {
                    index: r,
                    size: n_rows,
                });
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Dense row-major input, keeping only nonzero entries.
    pub fn from_dense(n_rows: usize, n_cols: usize, dense: &[f64]) -> Result<Self, LinalgError> {
        if dense.len() != n_rows * n_cols {
            return Err(LinalgError::DimensionMismatch {
                expected: n_rows * n_cols,
                got: dense.len(),
            });
        }
        let triplets = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i / n_cols, i % n_cols, v))
            .collect();
        Self::from_triplets(n_rows, n_cols, triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Sparse row `r` as `(col_indices, values)`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    fn csc(&self) -> &CscArrays {
        self.csc.get_or_init(|| {
            let mut col_offsets = vec![0usize; self.n_cols + 1];
            for &c in &self.col_indices {
                col_offsets[c + 1] += 1;
            }
            for c in 0..self.n_cols {
                col_offsets[c + 1] += col_offsets[c];
            }
            let mut cursor = col_offsets.clone();
            let mut row_indices = vec![0usize; self.nnz()];
            let mut values = vec![0.0; self.nnz()];
            for r in 0..self.n_rows {
                for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                    let c = self.col_indices[k];
                    row_indices[cursor[c]] = r;
                    values[cursor[c]] = self.values[k];
                    cursor[c] += 1;
                }
            }
            CscArrays {
                col_offsets,
                row_indices,
                values,
            }
        })
    }

    /// Sparse column `c` as `(row_indices, values)`, from the cached CSC view.
    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let csc = self.csc();
        let span = csc.col_offsets[c]..csc.col_offsets[c + 1];
        (&csc.row_indices[span.clone()], &csc.values[span])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation; dimensions must already match.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[r] = acc;
        }
    }

    /// `y = A^T x` without allocation.
    pub fn transpose_matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        y.fill(0.0);
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                y[self.col_indices[k]] += self.values[k] * xr;
            }
        }
    }

    /// Inner product of column `j` with `r`: `<a^j, r>`.
    pub fn col_dot(&self, j: usize, r: &[f64]) -> Result<f64, LinalgError> {
        if j >= self.n_cols {
            return Err(LinalgError::IndexOutOfRange {
                index: j,
                size: self.n_cols,
            });
        }
        if r.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_rows,
                got: r.len(),
            });
        }
        let (rows, vals) = self.col(j);
        Ok(rows.iter().zip(vals).map(|(&i, &v)| v * r[i]).sum())
    }

    /// `target += scale * a^j` (column j).
    pub fn col_axpy(&self, j: usize, scale: f64, target: &mut [f64]) {
        let (rows, vals) = self.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            target[i] += scale * v;
        }
    }

    /// `target += scale * (row j)` scattered over columns.
    pub fn row_axpy(&self, j: usize, scale: f64, target: &mut [f64]) {
        let (cols, vals) = self.row(j);
        for (&c, &v) in cols.iter().zip(vals) {
            target[c] += scale * v;
        }
    }

    /// Number of stored entries in column `j`.
    pub fn col_nnz(&self, j: usize) -> usize {
        let csc = self.csc();
        csc.col_offsets[j + 1] - csc.col_offsets[j]
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r * self.n_cols + c] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag12() -> CsrMatrix {
        CsrMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn matvec_diagonal() {
        let a = diag12();
        assert_eq!(a.matvec(&[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
    }

    #[test]
    fn matvec_empty_matrix() {
        let a = CsrMatrix::from_triplets(3, 2, vec![]).unwrap();
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.matvec(&[5.0, -1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn col_dot_hand_sum() {
        // A = [[1,2],[3,4]], column 1 dot (1,1) = 2 + 4 = 6
        let a = CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.col_dot(1, &[1.0, 1.0]).unwrap(), 6.0);
    }

    #[test]
    fn col_dot_out_of_range() {
        let a = diag12();
        assert!(matches!(
            a.col_dot(2, &[0.0, 0.0]),
            Err(LinalgError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn matvec_agrees_with_dense_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (n, d) = (7, 5);
        let dense: Vec<f64> = (0..n * d)
            .map(|_| {
                if rng.random::<f64>() < 0.4 {
                    rng.random_range(-2.0..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let a = CsrMatrix::from_dense(n, d, &dense).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = a.matvec(&x).unwrap();
        for r in 0..n {
            let expect: f64 = (0..d).map(|c| dense[r * d + c] * x[c]).sum();
            assert!(
                (y[r] - expect).abs() <= 1e-12,
                "row {r}: {} vs {expect}",
                y[r]
            );
        }
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err()); // col out of range
        assert!(CsrMatrix::new(1, 2, vec![1, 0], vec![], vec![]).is_err()); // non-monotone
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
    }
}
