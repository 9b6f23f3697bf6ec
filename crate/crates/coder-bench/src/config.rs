//! Run configuration: a TOML file with `[problem]`, `[solver]`,
//! `[reference]`, `[bench]`, `[lipschitz]`, and `[output]` sections. Unknown
//! keys are rejected; command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use coder::linalg::{BlockPartition, Vector};
use coder::solvers::{PermutationPolicy, SolverConfig, Variant};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub lipschitz: LipschitzSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    /// LIBSVM-format dataset path. Alternative: the `synthetic_*` fields.
    pub data: Option<PathBuf>,
    pub synthetic_n: Option<usize>,
    pub synthetic_d: Option<usize>,
    #[serde(default = "default_density")]
    pub synthetic_density: f64,
    #[serde(default)]
    pub synthetic_seed: u64,
    /// l1 weight (lasso, elastic net, l1-svm).
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Quadratic weight (elastic net only).
    pub lambda2: Option<f64>,
    /// Pair count for the bilinear toy.
    pub pairs: Option<usize>,
    pub max_samples: Option<usize>,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Uniform block size over the coordinates (1 = one coordinate per block).
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    /// Constant fill for the start iterate; defaults to 1 for the bilinear
    /// toy (whose solution is the origin) and 0 otherwise.
    pub start_value: Option<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Bilinear,
            data: None,
            synthetic_n: None,
            synthetic_d: None,
            synthetic_density: default_density(),
            synthetic_seed: 0,
            lambda: default_lambda(),
            lambda2: None,
            pairs: None,
            max_samples: None,
            normalize: true,
            block_size: 1,
            start_value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Lasso,
    ElasticNet,
    L1Svm,
    Bilinear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_variant")]
    pub variant: VariantName,
    /// Lipschitz constant; computed by the lipschitz module when absent.
    pub l: Option<f64>,
    /// Initial estimate for the parameter-free variant.
    pub l0: Option<f64>,
    /// Strong-convexity modulus; defaults to the problem's own.
    pub gamma: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget_passes: u64,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    #[serde(default)]
    pub permutation: PermutationName,
    #[serde(default)]
    pub permutation_seed: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_divergence")]
    pub divergence_threshold: f64,
    /// Multipliers `k` for the tuned grid `L = 10 k / n` (sweep mode).
    #[serde(default)]
    pub l_grid: Vec<u32>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            variant: default_variant(),
            l: None,
            l0: None,
            gamma: None,
            budget_passes: default_budget(),
            trace_every: default_trace_every(),
            permutation: PermutationName::Fixed,
            permutation_seed: 0,
            seed: 0,
            divergence_threshold: default_divergence(),
            l_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    Coder,
    CoderPf,
    Pccm,
    Prcm,
}

impl From<VariantName> for Variant {
    fn from(v: VariantName) -> Variant {
        match v {
            VariantName::Coder => Variant::Coder,
            VariantName::CoderPf => Variant::CoderPf,
            VariantName::Pccm => Variant::Pccm,
            VariantName::Prcm => Variant::Prcm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationName {
    #[default]
    Fixed,
    ShuffleOnce,
    ShufflePerIteration,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default)]
    pub policy: ReferencePolicy,
    /// Reference JSON path (for `load`, or where `compute` saves).
    pub path: Option<PathBuf>,
    #[serde(default = "default_ref_tol")]
    pub tol: f64,
    #[serde(default = "default_ref_budget")]
    pub budget_iterations: usize,
    /// Compute the reference with a fixed constant instead of the adaptive
    /// schedule (the practical choice on merely monotone instances).
    #[serde(default)]
    pub fixed_l: bool,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            policy: ReferencePolicy::Compute,
            path: None,
            tol: default_ref_tol(),
            budget_iterations: default_ref_budget(),
            fixed_l: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReferencePolicy {
    #[default]
    Compute,
    Load,
    None,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    /// l1 weights to sweep; falls back to the problem lambda when empty.
    #[serde(default)]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSection {
    #[serde(default)]
    pub mode: LipschitzMode,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub d_list: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
}

impl Default for LipschitzSection {
    fn default() -> Self {
        Self {
            mode: LipschitzMode::Sweep,
            n_list: Vec::new(),
            d_list: Vec::new(),
            repeats: default_repeats(),
            seed: 0,
            t_values: default_t_values(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LipschitzMode {
    #[default]
    Sweep,
    WorkedExample,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Record wall time in trace CSVs (off by default: reruns stay
    /// byte-identical).
    #[serde(default)]
    pub timing: bool,
}

fn default_density() -> f64 {
    0.1
}
fn default_lambda() -> f64 {
    1e-4
}
fn default_true() -> bool {
    true
}
fn default_block_size() -> usize {
    1
}
fn default_variant() -> VariantName {
    VariantName::Coder
}
fn default_budget() -> u64 {
    2000
}
fn default_trace_every() -> usize {
    10
}
fn default_divergence() -> f64 {
    1e100
}
fn default_ref_tol() -> f64 {
    1e-10
}
fn default_ref_budget() -> usize {
    20_000
}
fn default_repeats() -> usize {
    20
}
fn default_t_values() -> Vec<f64> {
    vec![1.0, 2.0, 10.0]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Partition over `dim` coordinates with the configured uniform block
    /// size (the last block absorbs the remainder).
    pub fn partition_for(&self, dim: usize) -> Result<BlockPartition, CliError> {
        let size = self.problem.block_size;
        if size == 0 {
            return Err(CliError::Config("block_size must be positive".into()));
        }
        if size == 1 {
            return Ok(BlockPartition::unit(dim));
        }
        let mut sizes = Vec::new();
        let mut left = dim;
        while left > 0 {
            let s = size.min(left);
            sizes.push(s);
            left -= s;
        }
        BlockPartition::new(sizes).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn permutation(&self) -> PermutationPolicy {
        match self.solver.permutation {
            PermutationName::Fixed => PermutationPolicy::Fixed,
            PermutationName::ShuffleOnce => {
                PermutationPolicy::ShuffleOnce(self.solver.permutation_seed)
            }
            PermutationName::ShufflePerIteration => {
                PermutationPolicy::ShufflePerIteration(self.solver.permutation_seed)
            }
        }
    }

    /// Iteration budget realizing `budget_passes` under each variant's pass
    /// accounting (extrapolating variants spend two passes per iteration
    /// plus one for the initial operator evaluation).
    pub fn iterations_for(&self, variant: Variant, budget_passes: u64) -> usize {
        let iters = match variant {
            Variant::Coder | Variant::CoderPf => budget_passes.saturating_sub(1) / 2,
            Variant::Pccm => budget_passes,
            Variant::Prcm => budget_passes.saturating_sub(1),
        };
        iters.max(1) as usize
    }

    pub fn solver_config(
        &self,
        variant: Variant,
        lipschitz: f64,
        gamma: f64,
        budget_passes: u64,
    ) -> SolverConfig {
        SolverConfig {
            variant,
            lipschitz,
            gamma,
            max_iterations: self.iterations_for(variant, budget_passes),
            permutation: self.permutation(),
            trace_every: self.solver.trace_every,
            seed: self.solver.seed,
            divergence_threshold: self.solver.divergence_threshold,
            lipschitz_cap_factor: 1e12,
            collect_diagnostics: false,
        }
    }
}

/// Start iterate: a constant fill (inside dom(g) for every instance at the
/// defaults).
pub fn start_point(dim: usize, value: f64) -> Result<Vector, CliError> {
    Vector::new(vec![value; dim]).map_err(|e| CliError::Config(e.to_string()))
}
