//! `solve`: one (problem, solver) run, or a tuned-grid sweep over
//! `L = 10 k / n` when the config lists grid multipliers.

use std::path::PathBuf;

use coder::metrics::IterateKind;
use coder::solvers::{solve, SolveResult, SolverError, Variant};

use crate::config::RunConfig;
use crate::instance::{self, Instance};
use crate::{CliError, CommonOverrides};

pub fn run(args: &CommonOverrides) -> Result<(), CliError> {
    let config = RunConfig::load(&args.config)?;
    let variant: Variant = config.solver.variant.into();
    let budget = args.budget_passes.unwrap_or(config.solver.budget_passes);

    let instance = instance::build(
        &config,
        args.lambda,
        args.max_samples,
        args.lipschitz.or(config.solver.l),
    )?;
    let reference = instance::resolve_reference(&config, &instance)?;

    let trace_path = args
        .out
        .clone()
        .or_else(|| config.output.trace.clone())
        .unwrap_or_else(|| PathBuf::from("trace.csv"));
    let timing = args.timing || config.output.timing;

    if !config.solver.l_grid.is_empty() {
        return grid_sweep(args, &config, &instance, reference.as_ref(), budget, &trace_path, timing);
    }

    let l = match variant {
        Variant::CoderPf => args
            .lipschitz0
            .or(config.solver.l0)
            .unwrap_or(instance.auto_l),
        _ => args
            .lipschitz
            .or(config.solver.l)
            .unwrap_or(instance.auto_l),
    };
    let gamma = resolve_gamma(&config, &instance)?;
    let mut solver_config = config.solver_config(variant, l, gamma, budget);
    if let Some(seed) = args.seed {
        solver_config.seed = seed;
    }

    let mut comments = run_comments(&config, &instance, variant, l, gamma, budget);
    if let Some(r) = &reference {
        comments.push(("reference".into(), r.method.clone()));
        comments.push(("reference_certified".into(), r.certified.to_string()));
    }

    let x0 = crate::config::start_point(instance.problem.dim());
    match solve(instance.problem.as_ref(), &solver_config, &x0, reference.as_ref()) {
        Ok(result) => {
            super::write_trace_file(&trace_path, &result.trace, &comments, timing)?;
            println!("{}", summary_line(variant, &result, &instance));
            if let Some(path) = &config.output.summary {
                std::fs::write(path, summary_line(variant, &result, &instance))
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(())
        }
        Err(SolverError::Divergence { iteration, partial }) => {
            super::write_trace_file(&trace_path, &partial.trace, &comments, timing)?;
            println!(
                "DIVERGED variant={} iteration={iteration} passes={}",
                variant.as_str(),
                partial.passes
            );
            Err(CliError::Divergence(format!(
                "{} diverged at iteration {iteration} (partial trace in {})",
                variant.as_str(),
                trace_path.display()
            )))
        }
        Err(e @ SolverError::LipschitzCapExceeded { .. }) => Err(CliError::Solver(e.to_string())),
        Err(e) => Err(CliError::Config(e.to_string())),
    }
}

fn grid_sweep(
    args: &CommonOverrides,
    config: &RunConfig,
    instance: &Instance,
    reference: Option<&coder::metrics::ReferenceSolution>,
    budget: u64,
    trace_path: &std::path::Path,
    timing: bool,
) -> Result<(), CliError> {
    if instance.n_samples == 0 {
        return Err(CliError::Config(
            "the tuned grid L = 10 k / n needs a dataset-backed problem".into(),
        ));
    }
    let variant: Variant = config.solver.variant.into();
    let gamma = resolve_gamma(config, instance)?;
    let n = instance.n_samples as f64;
    let grid: Vec<(u32, f64)> = config
        .solver
        .l_grid
        .iter()
        .map(|&k| (k, 10.0 * k as f64 / n))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let runs: Vec<(u32, f64, Result<SolveResult, SolverError>)> = pool.install(|| {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|&(k, l)| {
                let mut solver_config = config.solver_config(variant, l, gamma, budget);
                if let Some(seed) = args.seed {
                    solver_config.seed = seed;
                }
                let x0 = crate::config::start_point(instance.problem.dim());
                (
                    k,
                    l,
                    solve(instance.problem.as_ref(), &solver_config, &x0, reference),
                )
            })
            .collect()
    });

    for (k, l, outcome) in runs {
        let sub_path = grid_trace_path(trace_path, k);
        let mut comments = run_comments(config, instance, variant, l, gamma, budget);
        comments.push(("grid_multiplier".into(), k.to_string()));
        match outcome {
            Ok(result) => {
                super::write_trace_file(&sub_path, &result.trace, &comments, timing)?;
                println!("k={k} L={l:.6e} {}", summary_line(variant, &result, instance));
            }
            Err(SolverError::Divergence { iteration, partial }) => {
                super::write_trace_file(&sub_path, &partial.trace, &comments, timing)?;
                println!("k={k} L={l:.6e} DIVERGED iteration={iteration}");
            }
            Err(e) => return Err(CliError::Solver(e.to_string())),
        }
    }
    Ok(())
}

fn grid_trace_path(base: &std::path::Path, k: u32) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    let mut p = base.to_path_buf();
    p.set_file_name(format!("{stem}.k{k}.csv"));
    p
}

pub(crate) fn resolve_gamma(config: &RunConfig, instance: &Instance) -> Result<f64, CliError> {
    let problem_gamma = instance.problem.gamma();
    match config.solver.gamma {
        Some(g) if g > problem_gamma + 1e-12 => Err(CliError::Config(format!(
            "solver gamma {g} exceeds the problem modulus {problem_gamma}"
        ))),
        Some(g) => Ok(g),
        None => Ok(problem_gamma),
    }
}

pub(crate) fn run_comments(
    config: &RunConfig,
    instance: &Instance,
    variant: Variant,
    l: f64,
    gamma: f64,
    budget: u64,
) -> Vec<(String, String)> {
    let mut comments = vec![
        ("variant".into(), variant.as_str().into()),
        ("L_run".into(), format!("{l:.17e}")),
        ("gamma".into(), format!("{gamma:e}")),
        ("budget_passes".into(), budget.to_string()),
        ("solver_seed".into(), config.solver.seed.to_string()),
        (
            "permutation".into(),
            format!("{:?}", config.solver.permutation),
        ),
        (
            "permutation_seed".into(),
            config.solver.permutation_seed.to_string(),
        ),
    ];
    comments.extend(instance.descriptor.iter().cloned());
    comments
}

pub(crate) fn summary_line(variant: Variant, result: &SolveResult, instance: &Instance) -> String {
    let final_gap = result
        .trace
        .iter()
        .rev()
        .find(|t| t.iterate == IterateKind::Avg)
        .map_or(f64::NAN, |t| t.primal_gap);
    format!(
        "variant={} lambda={:e} iterations={} passes={} doublings={} final_avg_primal_gap={:.6e}",
        variant.as_str(),
        instance.lambda,
        result.iterations,
        result.passes,
        result.doubling_count,
        final_gap
    )
}
