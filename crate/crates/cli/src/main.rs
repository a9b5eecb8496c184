//! `kcport` — growth-optimal portfolio backtesting and simulation.
//!
//! Subcommands: `backtest` (universal-portfolio learner vs hindsight
//! benchmarks on price CSVs), `hindsight` (benchmarks only), `simulate`
//! (block-wise i.i.d. market pipeline), `bounds` (closed-form regret
//! bounds), `report` (merge summary tables).
//!
//! Exit codes: 0 success, 1 validation or input error, 2 runtime error
//! while producing output. Artifacts are computed fully in memory and then
//! written atomically, so failed runs leave no partial files. Identical
//! inputs, flags, and seeds produce byte-identical outputs regardless of
//! the worker count (`KCPORT_THREADS`; 0 or unset = automatic).

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use kcport_core::simplex::Density;

#[derive(Parser)]
#[command(
    name = "kcport",
    version,
    about = "Growth-optimal portfolio backtesting and block-market simulation",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the k-parallel universal portfolio on price data and compare it
    /// with hindsight benchmarks and the theoretical regret bound.
    Backtest(BacktestArgs),
    /// Compute hindsight benchmarks (best k-cyclic constant strategies)
    /// without running the learner.
    Hindsight(HindsightArgs),
    /// Simulate a block-wise i.i.d. market, solve for the growth-optimal
    /// tuple, and run the learner on the simulated data.
    Simulate(SimulateArgs),
    /// Print the closed-form worst-case regret bound.
    Bounds(BoundsArgs),
    /// Merge summary reports from earlier runs into one table.
    Report(ReportArgs),
}

fn parse_density(s: &str) -> Result<Density, String> {
    s.parse::<Density>().map_err(|e| e.to_string())
}

#[derive(Args)]
struct BacktestArgs {
    /// Wide-format price CSV: header `date,SYM1,...,SYMm`, positive prices,
    /// strictly increasing dates.
    #[arg(long)]
    input: PathBuf,
    /// Cycle lengths to run, comma-separated (e.g. `1,2,6`).
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Simplex grid step; must be the reciprocal of a positive integer.
    /// Defaults by asset count: 0.01 for m <= 3, 0.025 for m = 4, 0.1 above.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Prior weighting of the grid points: `uniform` or `dirichlet-half`.
    #[arg(long, default_value = "uniform", value_parser = parse_density)]
    density: Density,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Polish the reported benchmark portfolios off the grid (the regret
    /// series always uses the grid benchmark).
    #[arg(long)]
    refine: bool,
    /// Also emit SVG wealth and regret charts.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct HindsightArgs {
    /// Wide-format price CSV: header `date,SYM1,...,SYMm`.
    #[arg(long)]
    input: PathBuf,
    /// Cycle lengths to benchmark, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Simplex grid step; must be the reciprocal of a positive integer.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Polish each benchmark portfolio off the grid.
    #[arg(long)]
    refine: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Block distribution JSON: `{"k":..,"m":..,"support":[{"prob":..,
    /// "block":[[..]]},..]}`.
    #[arg(long)]
    dist: PathBuf,
    /// Number of i.i.d. blocks to draw (the sequence has `blocks * k`
    /// periods).
    #[arg(long)]
    blocks: usize,
    /// Seed of the ChaCha8 generator; equal seeds reproduce the market
    /// byte for byte.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cycle length of the learner (defaults to the distribution's own k).
    #[arg(long)]
    k_pup: Option<usize>,
    /// Simplex grid step for the learner.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Prior weighting of the grid points.
    #[arg(long, default_value = "uniform", value_parser = parse_density)]
    density: Density,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Also emit an SVG convergence chart.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// Cycle length k.
    #[arg(long)]
    k: usize,
    /// Number of assets m.
    #[arg(long)]
    m: usize,
    /// Horizon n (periods).
    #[arg(long)]
    n: usize,
    /// Prior the bound refers to: `uniform` or `dirichlet-half`.
    #[arg(long, default_value = "uniform", value_parser = parse_density)]
    density: Density,
}

#[derive(Args)]
struct ReportArgs {
    /// Summary CSVs produced by `backtest`, `hindsight`, or earlier
    /// `report` runs, in the order their rows should appear.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Path of the merged CSV.
    #[arg(long)]
    out: PathBuf,
}

/// A failed run, tagged with the exit code it maps to.
pub enum Failure {
    /// Bad arguments or bad input data; exit code 1.
    Validation(anyhow::Error),
    /// Failure while producing output; exit code 2.
    Runtime(anyhow::Error),
}

pub type CliResult = Result<(), Failure>;

/// Tags an error as a validation failure (exit 1).
pub fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

/// Tags an error as a runtime failure (exit 2).
pub fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Applies `KCPORT_THREADS` before any parallel work starts. `0` or unset
/// leaves the worker count automatic; the variable is validated (and then
/// ignored) in sequential builds too.
fn init_threads() -> CliResult {
    let Ok(raw) = std::env::var("KCPORT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| validation(anyhow::anyhow!("KCPORT_THREADS must be a non-negative integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| validation(anyhow::anyhow!("KCPORT_THREADS: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Backtest(args) => commands::backtest(args),
        Command::Hindsight(args) => commands::hindsight(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Bounds(args) => commands::bounds(args),
        Command::Report(args) => commands::report(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = init_threads().and_then(|()| dispatch(cli));
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
