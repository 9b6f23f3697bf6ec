//! `gen-data`: synthetic LIBSVM-format datasets with normalized Gaussian
//! rows and random labels.

use std::path::Path;

use coder::dataio;

use crate::CliError;

pub fn run(n: usize, d: usize, sparsity: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    if n == 0 || d == 0 {
        return Err(CliError::Config("n and d must be positive".into()));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(CliError::Config(format!(
            "sparsity must lie in [0, 1], got {sparsity}"
        )));
    }
    let dataset = dataio::gen_synthetic_dataset(n, d, sparsity, seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut file = std::fs::File::create(out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    dataio::write_libsvm(&mut file, &dataset).map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "wrote {} samples x {} features (nnz {}) to {}",
        dataset.n_samples(),
        dataset.n_features(),
        dataset.features.nnz(),
        out.display()
    );
    Ok(())
}
