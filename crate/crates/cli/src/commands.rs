//! Subcommand implementations.
//!
//! Every subcommand validates its inputs, computes all artifacts in
//! memory, and only then writes them (atomically, via [`crate::output`]),
//! so failures never leave partial files behind.

use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{anyhow, Context};

use kcport_core::fmt;
use kcport_core::hindsight::{
    best_kcc, best_kcc_series, check_consistency, regret_bound, write_benchmark_csv,
    write_regret_csv,
};
use kcport_core::kelly::{k_log_optimal, parse_distribution_path, simulate_market};
use kcport_core::market::ingest_returns_path;
use kcport_core::simplex::default_grid_step;
use kcport_core::trace::{performance_report, write_trace_csv, REPORT_CSV_HEADER};
use kcport_core::universal::run_kpup;
use kcport_core::{generate_grid, grid_weights, ReturnsSequence};

use crate::output::{atomic_write, OutputSet};
use crate::svg;
use crate::{
    runtime, validation, BacktestArgs, BoundsArgs, CliResult, HindsightArgs, ReportArgs,
    SimulateArgs,
};

/// Maximum polyline points per SVG series; longer series are decimated.
const SVG_MAX_POINTS: usize = 2000;

/// Stopping tolerance of the growth-optimal solver in `simulate`.
const KELLY_TOLERANCE: f64 = 1e-10;

fn check_cycle_lengths(k: &[usize]) -> CliResult {
    if k.iter().any(|&k| k == 0) {
        return Err(validation(anyhow!("--k values must be at least 1")));
    }
    Ok(())
}

fn load_returns(path: &std::path::Path) -> Result<ReturnsSequence, crate::Failure> {
    ingest_returns_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(validation)
}

pub fn backtest(args: BacktestArgs) -> CliResult {
    check_cycle_lengths(&args.k)?;
    let returns = load_returns(&args.input)?;
    let step = args.grid_step.unwrap_or_else(|| default_grid_step(returns.m()));
    let grid = generate_grid(returns.m(), step).map_err(validation)?;
    let grid = Arc::new(grid_weights(grid, args.density));

    let mut out = OutputSet::new(&args.out);
    let mut report = String::from(REPORT_CSV_HEADER);
    report.push('\n');
    let mut summary = Vec::new();
    for &k in &args.k {
        let trace = run_kpup(&returns, k, &grid).map_err(validation)?;
        let benchmarks = best_kcc_series(&returns, k, &grid).map_err(validation)?;
        let series = check_consistency(&trace, &benchmarks, args.density).map_err(validation)?;
        let performance = performance_report(&trace).map_err(validation)?;
        let _ = writeln!(report, "{}", performance.csv_row(&format!("{k}-PUP")));

        let mut wealth_csv = Vec::new();
        write_trace_csv(&mut wealth_csv, &trace, returns.labels()).map_err(runtime)?;
        out.add(format!("wealth_path_k{k}.csv"), wealth_csv);

        let mut regret_csv = Vec::new();
        write_regret_csv(&mut regret_csv, &series).map_err(runtime)?;
        out.add(format!("regret_k{k}.csv"), regret_csv);

        let benchmark = if args.refine {
            best_kcc(&returns, k, &grid, true).map_err(validation)?
        } else {
            benchmarks.last().expect("nonempty series").clone()
        };
        let mut benchmark_csv = Vec::new();
        write_benchmark_csv(&mut benchmark_csv, &benchmark).map_err(runtime)?;
        out.add(format!("benchmark_k{k}.csv"), benchmark_csv);

        if args.svg {
            let periods = |values: &[f64]| -> Vec<(f64, f64)> {
                values
                    .iter()
                    .enumerate()
                    .map(|(p, &v)| ((p + 1) as f64, v))
                    .collect()
            };
            let wealth_chart = svg::line_chart(
                &format!("Log-wealth, k = {k}"),
                "period",
                "log wealth",
                &[
                    svg::Series {
                        label: format!("{k}-PUP"),
                        color: svg::PALETTE[0],
                        points: svg::decimate(periods(trace.log_wealth()), SVG_MAX_POINTS),
                    },
                    svg::Series {
                        label: format!("best {k}-CC (prefix)"),
                        color: svg::PALETTE[1],
                        points: svg::decimate(
                            periods(
                                &benchmarks.iter().map(|b| b.log_wealth).collect::<Vec<f64>>(),
                            ),
                            SVG_MAX_POINTS,
                        ),
                    },
                ],
            );
            out.add(format!("wealth_k{k}.svg"), wealth_chart.into_bytes());
            let regret_chart = svg::line_chart(
                &format!("Per-period regret vs bound, k = {k}"),
                "period",
                "regret / n",
                &[
                    svg::Series {
                        label: "regret".to_string(),
                        color: svg::PALETTE[0],
                        points: svg::decimate(periods(&series.regret), SVG_MAX_POINTS),
                    },
                    svg::Series {
                        label: "bound".to_string(),
                        color: svg::PALETTE[1],
                        points: svg::decimate(periods(&series.bound), SVG_MAX_POINTS),
                    },
                ],
            );
            out.add(format!("regret_k{k}.svg"), regret_chart.into_bytes());
        }

        summary.push(format!(
            "k={k}: final_wealth={} growth_rate={} max_regret/bound={}",
            fmt::report(performance.final_wealth),
            fmt::report(performance.growth_rate),
            fmt::report(series.max_ratio()),
        ));
    }
    out.add("report.csv", report.into_bytes());
    let written = out
        .write_all()
        .context("writing output files")
        .map_err(runtime)?;
    for line in summary {
        println!("{line}");
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

pub fn hindsight(args: HindsightArgs) -> CliResult {
    check_cycle_lengths(&args.k)?;
    let returns = load_returns(&args.input)?;
    let step = args.grid_step.unwrap_or_else(|| default_grid_step(returns.m()));
    let grid = generate_grid(returns.m(), step).map_err(validation)?;

    let mut out = OutputSet::new(&args.out);
    let mut report = String::from(REPORT_CSV_HEADER);
    report.push('\n');
    let mut summary = Vec::new();
    for &k in &args.k {
        let benchmark = best_kcc(&returns, k, &grid, args.refine).map_err(validation)?;
        let trace = benchmark.trace(&returns).map_err(validation)?;
        let performance = performance_report(&trace).map_err(validation)?;
        let _ = writeln!(report, "{}", performance.csv_row(&format!("{k}-CC")));
        let mut benchmark_csv = Vec::new();
        write_benchmark_csv(&mut benchmark_csv, &benchmark).map_err(runtime)?;
        out.add(format!("benchmark_k{k}.csv"), benchmark_csv);
        summary.push(format!(
            "k={k}: log_wealth={} growth_rate={}",
            fmt::report(benchmark.log_wealth),
            fmt::report(performance.growth_rate),
        ));
    }
    out.add("report.csv", report.into_bytes());
    let written = out
        .write_all()
        .context("writing output files")
        .map_err(runtime)?;
    for line in summary {
        println!("{line}");
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> CliResult {
    if args.blocks == 0 {
        return Err(validation(anyhow!("--blocks must be at least 1")));
    }
    let dist = parse_distribution_path(&args.dist)
        .with_context(|| format!("reading {}", args.dist.display()))
        .map_err(validation)?;
    let k_pup = args.k_pup.unwrap_or_else(|| dist.k());
    check_cycle_lengths(&[k_pup])?;
    let step = args.grid_step.unwrap_or_else(|| default_grid_step(dist.m()));

    let optimum = k_log_optimal(&dist, KELLY_TOLERANCE).map_err(validation)?;
    let returns = simulate_market(&dist, args.blocks, args.seed).map_err(validation)?;
    let grid = generate_grid(dist.m(), step).map_err(validation)?;
    let grid = Arc::new(grid_weights(grid, args.density));
    let trace = run_kpup(&returns, k_pup, &grid).map_err(validation)?;

    let mut out = OutputSet::new(&args.out);

    let symbols: Vec<String> = (1..=dist.m()).map(|j| format!("A{j}")).collect();
    let mut returns_csv = Vec::new();
    kcport_core::market::write_returns_csv(&mut returns_csv, &returns, &symbols)
        .map_err(runtime)?;
    out.add("returns.csv", returns_csv);

    let mut wealth_csv = Vec::new();
    write_trace_csv(&mut wealth_csv, &trace, None).map_err(runtime)?;
    out.add(format!("wealth_path_k{k_pup}.csv"), wealth_csv);

    // Growth-rate convergence sampled at block boundaries.
    let mut convergence = String::from("block,period,growth_rate,optimal_rate,abs_error\n");
    let mut growth_points = Vec::with_capacity(args.blocks);
    for t in 1..=args.blocks {
        let period = t * dist.k();
        let growth = trace.log_wealth()[period - 1] / period as f64;
        let error = (growth - optimum.rate).abs();
        let _ = writeln!(
            convergence,
            "{t},{period},{},{},{}",
            fmt::full(growth),
            fmt::full(optimum.rate),
            fmt::full(error),
        );
        growth_points.push((period as f64, growth));
    }
    out.add("convergence.csv", convergence.into_bytes());

    let mut kelly_csv = String::from("position");
    for j in 1..=dist.m() {
        let _ = write!(kelly_csv, ",w{j}");
    }
    kelly_csv.push('\n');
    for (i, portfolio) in optimum.portfolios.iter().enumerate() {
        let _ = write!(kelly_csv, "{}", i + 1);
        for w in portfolio.weights() {
            let _ = write!(kelly_csv, ",{}", fmt::full(*w));
        }
        kelly_csv.push('\n');
    }
    out.add("kelly.csv", kelly_csv.into_bytes());

    if args.svg {
        let first = growth_points.first().expect("blocks >= 1").0;
        let last = growth_points.last().expect("blocks >= 1").0;
        let chart = svg::line_chart(
            &format!("Growth-rate convergence, {k_pup}-PUP"),
            "period",
            "growth rate",
            &[
                svg::Series {
                    label: format!("{k_pup}-PUP"),
                    color: svg::PALETTE[0],
                    points: svg::decimate(growth_points, SVG_MAX_POINTS),
                },
                svg::Series {
                    label: "optimal rate".to_string(),
                    color: svg::PALETTE[1],
                    points: vec![(first, optimum.rate), (last, optimum.rate)],
                },
            ],
        );
        out.add("convergence.svg", chart.into_bytes());
    }

    let written = out
        .write_all()
        .context("writing output files")
        .map_err(runtime)?;
    let final_growth = trace.final_log_wealth() / trace.n() as f64;
    println!("optimal growth rate: {}", fmt::report(optimum.rate));
    println!(
        "learner growth rate after {} periods: {}",
        trace.n(),
        fmt::report(final_growth)
    );
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

pub fn bounds(args: BoundsArgs) -> CliResult {
    if args.k == 0 {
        return Err(validation(anyhow!("--k must be at least 1")));
    }
    if args.m < 2 {
        return Err(validation(anyhow!("--m must be at least 2")));
    }
    if args.n == 0 {
        return Err(validation(anyhow!("--n must be at least 1")));
    }
    let bound = regret_bound(args.k, args.m, args.n, args.density);
    println!("{}", fmt::report(bound));
    Ok(())
}

pub fn report(args: ReportArgs) -> CliResult {
    let mut merged = String::from(REPORT_CSV_HEADER);
    merged.push('\n');
    for path in &args.inputs {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(validation)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == REPORT_CSV_HEADER => {}
            other => {
                return Err(validation(anyhow!(
                    "{}: expected header {:?}, found {:?}",
                    path.display(),
                    REPORT_CSV_HEADER,
                    other.unwrap_or_default()
                )));
            }
        }
        for line in lines {
            if !line.is_empty() {
                merged.push_str(line);
                merged.push('\n');
            }
        }
    }
    atomic_write(&args.out, merged.as_bytes())
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(runtime)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
