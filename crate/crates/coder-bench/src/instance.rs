//! Builds problem instances from a run configuration, computes the module
//! Lipschitz constant, and handles reference-solution persistence.

use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use coder::dataio::{self, LabeledDataset};
use coder::linalg::Vector;
use coder::lipschitz;
use coder::metrics::{compute_reference, ReferenceOptions, ReferenceSolution};
use coder::problems::{
    make_bilinear_toy, make_elastic_net, make_l1_svm, make_lasso, GmviProblem,
};

use crate::config::{ProblemKind, ReferencePolicy, RunConfig};
use crate::CliError;

pub struct Instance {
    pub problem: Box<dyn GmviProblem>,
    /// Sample count of the backing dataset (tuned-grid constants scale with
    /// it); 0 for the bilinear toy.
    pub n_samples: usize,
    /// Constant computed by the lipschitz module for the natural order.
    pub auto_l: f64,
    pub lambda: f64,
    pub x0: Vector,
    /// `key = value` pairs recorded in output header comments.
    pub descriptor: Vec<(String, String)>,
}

fn load_dataset(config: &RunConfig, max_samples: Option<usize>) -> Result<LabeledDataset, CliError> {
    let p = &config.problem;
    let mut dataset = if let Some(path) = &p.data {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
        dataio::parse_libsvm(BufReader::new(file))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
    } else if let (Some(n), Some(d)) = (p.synthetic_n, p.synthetic_d) {
        dataio::gen_synthetic_dataset(n, d, p.synthetic_density, p.synthetic_seed)
            .map_err(|e| CliError::Config(e.to_string()))?
    } else {
        return Err(CliError::Config(
            "problem needs either data = \"path\" or synthetic_n / synthetic_d".into(),
        ));
    };
    if let Some(max) = max_samples.or(p.max_samples) {
        dataset = dataset
            .truncate(max)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if p.normalize {
        dataset = dataset
            .normalize_rows()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if dataset.n_samples() == 0 {
        return Err(CliError::Config("dataset has no samples".into()));
    }
    Ok(dataset)
}

/// Builds the configured problem. `lambda` overrides the config value, and
/// `l_override` skips the module computation.
pub fn build(
    config: &RunConfig,
    lambda: Option<f64>,
    max_samples: Option<usize>,
    l_override: Option<f64>,
) -> Result<Instance, CliError> {
    let lambda = lambda.unwrap_or(config.problem.lambda);
    let mut descriptor = vec![
        ("lambda".to_string(), format!("{lambda:e}")),
        (
            "normalize".to_string(),
            config.problem.normalize.to_string(),
        ),
    ];
    if let Some(path) = &config.problem.data {
        descriptor.push(("data".to_string(), path.display().to_string()));
    } else {
        descriptor.push((
            "synthetic".to_string(),
            format!(
                "n={:?} d={:?} density={} seed={}",
                config.problem.synthetic_n,
                config.problem.synthetic_d,
                config.problem.synthetic_density,
                config.problem.synthetic_seed
            ),
        ));
    }

    let kind = config.problem.kind;
    let (problem, n_samples, auto_l): (Box<dyn GmviProblem>, usize, f64) = match kind {
        ProblemKind::Lasso | ProblemKind::ElasticNet => {
            let dataset = load_dataset(config, max_samples)?;
            let n = dataset.n_samples();
            let partition = config.partition_for(dataset.n_features())?;
            let auto_l = match l_override {
                Some(l) => l,
                None => {
                    let gram = lipschitz::composite_operator_matrix(&dataset.features)
                        .map_err(|e| CliError::Config(format!(
                            "cannot compute the module constant: {e}; pass --L"
                        )))?;
                    lipschitz::lipschitz_constants_linear(&gram, &partition, None)
                        .map_err(|e| CliError::Config(e.to_string()))?
                        .l
                }
            };
            let problem: Box<dyn GmviProblem> = if kind == ProblemKind::Lasso {
                Box::new(
                    make_lasso(dataset.features, dataset.labels, lambda, partition)
                        .map_err(|e| CliError::Config(e.to_string()))?,
                )
            } else {
                let lambda2 = config.problem.lambda2.ok_or_else(|| {
                    CliError::Config("elastic-net needs lambda2 > 0".into())
                })?;
                Box::new(
                    make_elastic_net(dataset.features, dataset.labels, lambda, lambda2, partition)
                        .map_err(|e| CliError::Config(e.to_string()))?,
                )
            };
            (problem, n, auto_l)
        }
        ProblemKind::L1Svm => {
            let dataset = load_dataset(config, max_samples)?;
            let n = dataset.n_samples();
            let abar =
                dataio::build_svm_matrix(&dataset).map_err(|e| CliError::Config(e.to_string()))?;
            let partition = config.partition_for(abar.n_cols() + abar.n_rows())?;
            let auto_l = match l_override {
                Some(l) => l,
                None => {
                    let saddle = lipschitz::saddle_operator_matrix(&abar).map_err(|e| {
                        CliError::Config(format!(
                            "cannot compute the module constant: {e}; pass --L"
                        ))
                    })?;
                    lipschitz::lipschitz_constants_linear(&saddle, &partition, None)
                        .map_err(|e| CliError::Config(e.to_string()))?
                        .l
                }
            };
            (
                Box::new(
                    make_l1_svm(abar, lambda, partition)
                        .map_err(|e| CliError::Config(e.to_string()))?,
                ),
                n,
                auto_l,
            )
        }
        ProblemKind::Bilinear => {
            let pairs = config.problem.pairs.unwrap_or(5);
            let toy = make_bilinear_toy(pairs);
            let auto_l = match l_override {
                Some(l) => l,
                None => {
                    let mut b = coder::linalg::DenseMatrix::zeros(2 * pairs, 2 * pairs)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    for i in 0..pairs {
                        b.set(2 * i, 2 * i + 1, 1.0);
                        b.set(2 * i + 1, 2 * i, -1.0);
                    }
                    lipschitz::lipschitz_constants_linear(&b, toy.partition(), None)
                        .map_err(|e| CliError::Config(e.to_string()))?
                        .l
                }
            };
            descriptor.push(("pairs".to_string(), pairs.to_string()));
            (Box::new(toy), 0, auto_l)
        }
    };

    let start_default = if kind == ProblemKind::Bilinear { 1.0 } else { 0.0 };
    let start = config.problem.start_value.unwrap_or(start_default);
    let x0 = crate::config::start_point(problem.dim(), start)?;
    descriptor.push(("start_value".to_string(), format!("{start}")));
    descriptor.push(("L".to_string(), format!("{auto_l:.17e}")));
    Ok(Instance {
        problem,
        n_samples,
        auto_l,
        lambda,
        x0,
        descriptor,
    })
}

#[derive(Serialize, Deserialize)]
struct StoredReference {
    x_star: Vec<f64>,
    f_star: f64,
    method: String,
    iterations_used: usize,
    residual: f64,
    certified: bool,
}

pub fn save_reference(path: &Path, r: &ReferenceSolution) -> Result<(), CliError> {
    let stored = StoredReference {
        x_star: r.x_star.as_slice().to_vec(),
        f_star: r.f_star,
        method: r.method.clone(),
        iterations_used: r.iterations_used,
        residual: r.residual,
        certified: r.certified,
    };
    let text = serde_json::to_string(&stored)
        .map_err(|e| CliError::Io(format!("cannot serialize reference: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn load_reference(
    path: &Path,
    problem: &dyn GmviProblem,
) -> Result<ReferenceSolution, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let stored: StoredReference = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid reference file: {e}")))?;
    let x_star = Vector::new(stored.x_star)
        .map_err(|e| CliError::Config(format!("reference point not finite: {e}")))?;
    let r = ReferenceSolution::from_point(
        problem,
        x_star,
        stored.method,
        stored.iterations_used,
        stored.residual,
        stored.certified,
    );
    if (r.f_star - stored.f_star).abs() > 1e-9 * (1.0 + stored.f_star.abs()) {
        log::warn!(
            "loaded reference value {} disagrees with recomputation {}",
            stored.f_star,
            r.f_star
        );
    }
    Ok(r)
}

/// Resolves the reference per the configured policy.
pub fn resolve_reference(
    config: &RunConfig,
    instance: &Instance,
) -> Result<Option<ReferenceSolution>, CliError> {
    match config.reference.policy {
        ReferencePolicy::None => Ok(None),
        ReferencePolicy::Load => {
            let path = config.reference.path.as_ref().ok_or_else(|| {
                CliError::Config("reference.policy = \"load\" needs reference.path".into())
            })?;
            Ok(Some(load_reference(path, instance.problem.as_ref())?))
        }
        ReferencePolicy::Compute => {
            let opts = ReferenceOptions {
                l0: instance.auto_l.max(1e-12),
                max_iterations: config.reference.budget_iterations,
                tol: config.reference.tol,
                fixed_l: config.reference.fixed_l.then_some(instance.auto_l),
            };
            let r = compute_reference(instance.problem.as_ref(), &opts)
                .map_err(|e| CliError::Solver(e.to_string()))?;
            if let Some(path) = &config.reference.path {
                save_reference(path, &r)?;
            }
            Ok(Some(r))
        }
    }
}
