//! `bench`: CODER vs PCCM vs PRCM on the same problem with identical seeds
//! and budgets, one trace per variant plus a merged averaged-iterate gap
//! table aligned by passes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use coder::metrics::IterateKind;
use coder::solvers::{solve, SolverError, Variant};

use crate::config::RunConfig;
use crate::instance;
use crate::{CliError, CommonOverrides};

const VARIANTS: [Variant; 3] = [Variant::Coder, Variant::Pccm, Variant::Prcm];

pub fn run(args: &CommonOverrides) -> Result<(), CliError> {
    let config = RunConfig::load(&args.config)?;
    let budget = args.budget_passes.unwrap_or(config.solver.budget_passes);
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.trace.clone())
        .unwrap_or_else(|| PathBuf::from("bench-out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let timing = args.timing || config.output.timing;

    let lambdas = if config.bench.lambdas.is_empty() {
        vec![args.lambda.unwrap_or(config.problem.lambda)]
    } else {
        config.bench.lambdas.clone()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let outcomes: Vec<Result<Vec<String>, CliError>> = pool.install(|| {
        use rayon::prelude::*;
        lambdas
            .par_iter()
            .map(|&lambda| bench_one_lambda(args, &config, lambda, budget, &out_dir, timing))
            .collect()
    });
    for outcome in outcomes {
        for line in outcome? {
            println!("{line}");
        }
    }
    Ok(())
}

fn bench_one_lambda(
    args: &CommonOverrides,
    config: &RunConfig,
    lambda: f64,
    budget: u64,
    out_dir: &Path,
    timing: bool,
) -> Result<Vec<String>, CliError> {
    let instance = instance::build(
        config,
        Some(lambda),
        args.max_samples,
        args.lipschitz.or(config.solver.l),
    )?;
    let reference = instance::resolve_reference(config, &instance)?;
    let gamma = super::solve::resolve_gamma(config, &instance)?;
    let l = args
        .lipschitz
        .or(config.solver.l)
        .unwrap_or(instance.auto_l);

    let mut lines = Vec::new();
    // averaged-iterate gap per variant, keyed by passes
    let mut merged: BTreeMap<u64, [Option<f64>; 3]> = BTreeMap::new();
    for (slot, &variant) in VARIANTS.iter().enumerate() {
        let mut solver_config = config.solver_config(variant, l, gamma, budget);
        if let Some(seed) = args.seed {
            solver_config.seed = seed;
        }
        let x0 = crate::config::start_point(instance.problem.dim());
        let mut comments =
            super::solve::run_comments(config, &instance, variant, l, gamma, budget);
        if let Some(r) = &reference {
            comments.push(("reference".into(), r.method.clone()));
        }
        let trace_path = out_dir.join(format!("{}_lambda{:e}.csv", variant.as_str(), lambda));
        let trace = match solve(instance.problem.as_ref(), &solver_config, &x0, reference.as_ref())
        {
            Ok(result) => {
                lines.push(super::solve::summary_line(variant, &result, &instance));
                result.trace
            }
            // a diverging variant is recorded, not fatal to the others
            Err(SolverError::Divergence { iteration, partial }) => {
                lines.push(format!(
                    "variant={} lambda={lambda:e} DIVERGED iteration={iteration}",
                    variant.as_str()
                ));
                partial.trace
            }
            Err(e) => return Err(CliError::Solver(e.to_string())),
        };
        super::write_trace_file(&trace_path, &trace, &comments, timing)?;
        for record in trace.iter().filter(|t| t.iterate == IterateKind::Avg) {
            merged.entry(record.passes).or_default()[slot] = Some(record.primal_gap);
        }
    }

    let merged_path = out_dir.join(format!("merged_lambda{lambda:e}.csv"));
    let mut file = std::fs::File::create(&merged_path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", merged_path.display())))?;
    let mut write = || -> std::io::Result<()> {
        writeln!(file, "passes,coder,pccm,prcm")?;
        for (passes, gaps) in &merged {
            write!(file, "{passes}")?;
            for g in gaps {
                match g {
                    Some(v) => write!(file, ",{v:.17e}")?,
                    None => write!(file, ",")?,
                }
            }
            writeln!(file)?;
        }
        Ok(())
    };
    write().map_err(|e| CliError::Io(format!("cannot write {}: {e}", merged_path.display())))?;
    Ok(lines)
}
