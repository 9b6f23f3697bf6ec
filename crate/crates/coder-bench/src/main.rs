//! Benchmark front end for the coordinate solvers: wires configs to problem
//! instances, runs solves and variant comparisons, and writes trace CSVs.

mod commands;
mod config;
mod instance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or flags (exit 2).
    Config(String),
    /// A run diverged (exit 3); partial outputs are kept.
    Divergence(String),
    /// Solver could not proceed (exit 3).
    Solver(String),
    /// File problems (exit 4).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) | CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Divergence(m)
            | CliError::Solver(m)
            | CliError::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "coder-bench",
    about = "Cyclic coordinate dual-averaging solvers: run, compare, and measure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one (problem, solver) pair and write its trace.
    Solve(SolveArgs),
    /// Run CODER, PCCM, and PRCM on the same problem and budget.
    Bench(BenchArgs),
    /// Lipschitz-constant sweeps and the two-block worked example.
    Lipschitz(LipschitzArgs),
    /// Write a synthetic LIBSVM-format dataset.
    GenData(GenDataArgs),
}

#[derive(Args)]
struct CommonOverrides {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output path (trace CSV for solve, directory for bench).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the solver seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the l1 weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Override the Lipschitz constant.
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    /// Override the initial estimate for the parameter-free variant.
    #[arg(long = "L0")]
    lipschitz0: Option<f64>,
    /// Override the pass budget.
    #[arg(long)]
    budget_passes: Option<u64>,
    /// Truncate the dataset to this many samples.
    #[arg(long)]
    max_samples: Option<usize>,
    /// Parallel workers for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Record wall time in trace CSVs (reruns stop being byte-identical).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonOverrides,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonOverrides,
}

#[derive(Args)]
struct LipschitzArgs {
    /// Configuration file (TOML) with a [lipschitz] section.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; medians go to `<out>.medians.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    /// Samples.
    #[arg(long)]
    n: usize,
    /// Features.
    #[arg(long)]
    d: usize,
    /// Expected fraction of nonzero entries per row.
    #[arg(long, default_value_t = 0.1)]
    sparsity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (LIBSVM text).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => commands::solve::run(&args.common),
        Command::Bench(args) => commands::bench::run(&args.common),
        Command::Lipschitz(args) => commands::lipschitz::run(&args.config, args.out.as_deref()),
        Command::GenData(args) => {
            commands::gendata::run(args.n, args.d, args.sparsity, args.seed, &args.out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
