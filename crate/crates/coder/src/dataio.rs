//! Dataset ingestion (LIBSVM text format), the preprocessing used by the
//! benchmarks (unit-norm rows, binary label remap), synthetic Gaussian
//! designs, and deterministic seed derivation.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{CsrMatrix, DenseMatrix, LinalgError};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("label {0} outside 0..=9")]
    LabelOutOfRange(i64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A binary classification dataset: sparse features with labels in {+1, -1}.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: CsrMatrix,
    pub labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Keeps only the first `max` samples.
    pub fn truncate(self, max: usize) -> Result<Self, DataError> {
        if self.n_samples() <= max {
            return Ok(self);
        }
        let d = self.features.n_cols();
        let mut triplets = Vec::new();
        for r in 0..max {
            let (cols, vals) = self.features.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r, c, v));
            }
        }
        Ok(Self {
            features: CsrMatrix::from_triplets(max, d, triplets)?,
            labels: self.labels[..max].to_vec(),
        })
    }

    /// Scales every nonzero row to unit Euclidean norm. Zero rows stay zero
    /// (with a warning); repeated application is a no-op.
    pub fn normalize_rows(self) -> Result<Self, DataError> {
        let (n, d) = (self.features.n_rows(), self.features.n_cols());
        let mut triplets = Vec::new();
        let mut zero_rows = 0usize;
        for r in 0..n {
            let (cols, vals) = self.features.row(r);
            let norm: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                zero_rows += 1;
                continue;
            }
            for (&c, &v) in cols.iter().zip(vals) {
                triplets.push((r, c, v / norm));
            }
        }
        if zero_rows > 0 {
            log::warn!("normalize_rows: {zero_rows} zero rows left unscaled");
        }
        Ok(Self {
            features: CsrMatrix::from_triplets(n, d, triplets)?,
            labels: self.labels,
        })
    }
}

/// Parses LIBSVM text: `<label> <index>:<value> ...` per line, 1-based
/// ascending indices. Positive labels map to +1, the rest to -1. The feature
/// dimension is the largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<LabeledDataset, DataError> {
    let mut labels = Vec::new();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut n_cols = 0usize;
    let mut row = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_text = parts.next().expect("non-empty line has a first token");
        let label: f64 = label_text.parse().map_err(|_| DataError::Malformed {
            line: line_no + 1,
            message: format!("bad label {label_text:?}"),
        })?;
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
        let mut prev_index = 0usize;
        for token in parts {
            let (idx_text, val_text) = token.split_once(':').ok_or_else(|| {
                DataError::Malformed {
                    line: line_no + 1,
                    message: format!("expected index:value, got {token:?}"),
                }
            })?;
            let index: usize = idx_text.parse().map_err(|_| DataError::Malformed {
                line: line_no + 1,
                message: format!("bad index {idx_text:?}"),
            })?;
            if index == 0 {
                return Err(DataError::Malformed {
                    line: line_no + 1,
                    message: "indices are 1-based".into(),
                });
            }
            if index <= prev_index {
                return Err(DataError::Malformed {
                    line: line_no + 1,
                    message: format!("indices not ascending at {index}"),
                });
            }
            prev_index = index;
            let value: f64 = val_text.parse().map_err(|_| DataError::Malformed {
                line: line_no + 1,
                message: format!("bad value {val_text:?}"),
            })?;
            n_cols = n_cols.max(index);
            triplets.push((row, index - 1, value));
        }
        row += 1;
    }
    Ok(LabeledDataset {
        features: CsrMatrix::from_triplets(row, n_cols, triplets)?,
        labels,
    })
}

/// Writes a dataset in LIBSVM text format (1-based indices, `%.17e` values).
pub fn write_libsvm<W: Write>(w: &mut W, dataset: &LabeledDataset) -> Result<(), DataError> {
    for r in 0..dataset.n_samples() {
        let label = if dataset.labels[r] > 0.0 { "+1" } else { "-1" };
        write!(w, "{label}")?;
        let (cols, vals) = dataset.features.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            write!(w, " {}:{:.17e}", c + 1, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Binary remap for 10-class digit labels: +1 for 5..=9, -1 for 0..=4.
pub fn remap_mnist_label(raw: i64) -> Result<f64, DataError> {
    if !(0..=9).contains(&raw) {
        return Err(DataError::LabelOutOfRange(raw));
    }
    Ok(if raw >= 5 { 1.0 } else { -1.0 })
}

/// Label-scaled design for the SVM saddle problem: row j of the output is
/// `b_j * a_j`.
pub fn build_svm_matrix(dataset: &LabeledDataset) -> Result<CsrMatrix, DataError> {
    let (n, d) = (dataset.features.n_rows(), dataset.features.n_cols());
    let mut triplets = Vec::with_capacity(dataset.features.nnz());
    for r in 0..n {
        let (cols, vals) = dataset.features.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            triplets.push((r, c, dataset.labels[r] * v));
        }
    }
    Ok(CsrMatrix::from_triplets(n, d, triplets)?)
}

/// Deterministic sub-seed derivation (splitmix64 over the master seed and a
/// context path), so concurrent sweep entries draw independent, reproducible
/// streams.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = master;
    for &p in path {
        state = splitmix64(state ^ splitmix64(p));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Dense `n x d` design with i.i.d. standard-Gaussian entries, drawn
/// row-major from a ChaCha8 stream keyed by `seed` (ziggurat sampling).
pub fn gen_gaussian(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    DenseMatrix::from_rows(n, d, values).expect("gaussian entries are finite")
}

/// Synthetic LIBSVM-style dataset: Gaussian features thinned to `density`,
/// uniform random +-1 labels, rows normalized to unit Euclidean norm.
pub fn gen_synthetic_dataset(
    n: usize,
    d: usize,
    density: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    let mut labels = Vec::with_capacity(n);
    use rand::Rng;
    for r in 0..n {
        for c in 0..d {
            if rng.random::<f64>() < density {
                let v: f64 = StandardNormal.sample(&mut rng);
                triplets.push((r, c, v));
            }
        }
        labels.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    LabeledDataset {
        features: CsrMatrix::from_triplets(n, d, triplets)?,
        labels,
    }
    .normalize_rows()
}
