//! Hindsight benchmarks and regret accounting.
//!
//! The hindsight references are the best constant-rebalanced portfolio
//! (CRP) on a grid and its cyclic generalization: the best `k`-cyclic
//! constant strategy (`k`-CC), which fixes one portfolio per cyclic
//! position. Because wealth factorizes across the cyclic decomposition, the
//! best `k`-CC is found by solving `k` independent best-CRP problems, one
//! per subsequence.
//!
//! The worst-case regret of the universal mixture against the best CRP is
//! logarithmic in the horizon; running `k` parallel copies multiplies the
//! bound by `k`:
//!
//! * uniform prior: `k·(m-1)·ln(n+1)`;
//! * Dirichlet(1/2) prior: `(k/2)·(m-1)·ln(n+1) + k·ln 2`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::exec;
use crate::fmt;
use crate::market::decompose;
use crate::optimize;
use crate::portfolio::Portfolio;
use crate::returns::ReturnsSequence;
use crate::simplex::{Density, PortfolioGrid};
use crate::trace::StrategyTrace;

/// Improvement tolerance used when [`best_kcc`] refines its grid optima.
pub const REFINE_TOLERANCE: f64 = 1e-10;

/// Accumulated log-wealth of `portfolio` held constant over `returns`.
fn log_wealth_of(portfolio: &Portfolio, returns: &ReturnsSequence) -> f64 {
    returns.rows().map(|row| portfolio.dot(row).ln()).sum()
}

/// Log-wealth of every grid point over `returns`, in grid order.
fn grid_log_wealths(returns: &ReturnsSequence, grid: &PortfolioGrid) -> Vec<f64> {
    let m = grid.num_assets();
    exec::map_chunks(grid.len(), |start, end| {
        (start..end)
            .map(|g| {
                let point = grid.point(g);
                returns
                    .rows()
                    .map(|row| {
                        let dot: f64 = point.iter().zip(row).map(|(w, x)| w * x).sum();
                        debug_assert_eq!(row.len(), m);
                        dot.ln()
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// The grid point with the largest hindsight log-wealth on `returns`,
/// together with that log-wealth. Ties resolve to the lexicographically
/// smallest point.
///
/// Errors: [`Error::EmptySequence`] for `n = 0`; asset-count mismatch
/// between grid and returns.
pub fn best_crp(returns: &ReturnsSequence, grid: &PortfolioGrid) -> Result<(Portfolio, f64)> {
    if returns.n() == 0 {
        return Err(Error::EmptySequence);
    }
    if grid.num_assets() != returns.m() {
        return Err(Error::AssetCountMismatch {
            left: grid.num_assets(),
            right: returns.m(),
        });
    }
    let objectives = grid_log_wealths(returns, grid);
    let (best, value) = exec::argmax_first(&objectives);
    Ok((grid.portfolio(best), value))
}

/// Polishes a CRP candidate off the grid by projected gradient ascent on
/// the mean log-return, stopping when one accepted step improves the
/// objective by less than `tol`.
pub fn refine_crp(
    returns: &ReturnsSequence,
    initial: &Portfolio,
    tol: f64,
) -> Result<Portfolio> {
    if returns.n() == 0 {
        return Err(Error::EmptySequence);
    }
    if initial.num_assets() != returns.m() {
        return Err(Error::AssetCountMismatch {
            left: initial.num_assets(),
            right: returns.m(),
        });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidTolerance(tol));
    }
    let weights = vec![1.0 / returns.n() as f64; returns.n()];
    let refined = optimize::gradient_ascent(
        returns.values(),
        &weights,
        initial.weights(),
        tol,
    );
    Portfolio::new(refined)
}

/// A best `k`-cyclic constant benchmark: one portfolio per cyclic position
/// and the total hindsight log-wealth they achieve together.
#[derive(Debug, Clone)]
pub struct KccBenchmark {
    pub k: usize,
    pub portfolios: Vec<Portfolio>,
    pub log_wealth: f64,
}

impl KccBenchmark {
    /// The benchmark played as an actual strategy trace over `returns`.
    pub fn trace(&self, returns: &ReturnsSequence) -> Result<StrategyTrace> {
        StrategyTrace::from_cycle(returns, &self.portfolios)
    }
}

/// The best `k`-cyclic constant strategy on `returns`.
///
/// Wealth factorizes across the cyclic decomposition, so position `i` is
/// the best CRP of subsequence `i` alone; the benchmark log-wealth is the
/// sum of the per-subsequence optima. Empty subsequences (when `k > n`)
/// contribute the uniform portfolio and zero log-wealth. With `refine` set,
/// each non-empty optimum is polished off the grid by [`refine_crp`] at
/// [`REFINE_TOLERANCE`].
pub fn best_kcc(
    returns: &ReturnsSequence,
    k: usize,
    grid: &PortfolioGrid,
    refine: bool,
) -> Result<KccBenchmark> {
    if grid.num_assets() != returns.m() {
        return Err(Error::AssetCountMismatch {
            left: grid.num_assets(),
            right: returns.m(),
        });
    }
    let decomposition = decompose(returns, k)?;
    let mut portfolios = Vec::with_capacity(k);
    let mut log_wealth = 0.0;
    for subsequence in decomposition.iter() {
        if subsequence.is_empty() {
            portfolios.push(Portfolio::uniform(returns.m()));
            continue;
        }
        let (mut portfolio, mut value) = best_crp(subsequence.returns(), grid)?;
        if refine {
            let polished = refine_crp(subsequence.returns(), &portfolio, REFINE_TOLERANCE)?;
            let polished_value = log_wealth_of(&polished, subsequence.returns());
            if polished_value > value {
                portfolio = polished;
                value = polished_value;
            }
        }
        portfolios.push(portfolio);
        log_wealth += value;
    }
    Ok(KccBenchmark {
        k,
        portfolios,
        log_wealth,
    })
}

/// Best `k`-CC benchmarks for every prefix of `returns`: element `p` is the
/// benchmark of the first `p+1` periods (grid optima, no refinement).
///
/// Streaming evaluation: each new period updates only its own position's
/// per-point log-wealth, so the whole series costs the same as one pass of
/// the universal portfolio.
pub fn best_kcc_series(
    returns: &ReturnsSequence,
    k: usize,
    grid: &PortfolioGrid,
) -> Result<Vec<KccBenchmark>> {
    if k == 0 {
        return Err(Error::InvalidCycleLength);
    }
    if grid.num_assets() != returns.m() {
        return Err(Error::AssetCountMismatch {
            left: grid.num_assets(),
            right: returns.m(),
        });
    }
    let m = returns.m();
    let points = grid.len();
    // Per active position: running per-point log-wealth and current best.
    let mut position_wealth: Vec<Vec<f64>> = Vec::new();
    let mut position_best: Vec<(usize, f64)> = Vec::new();
    let mut series = Vec::with_capacity(returns.n());
    for p in 0..returns.n() {
        let i = p % k;
        if i == position_wealth.len() {
            position_wealth.push(vec![0.0; points]);
            position_best.push((0, 0.0));
        }
        let row = returns.row(p);
        let wealth = &mut position_wealth[i];
        exec::for_each_chunk_mut(wealth, |offset, chunk| {
            for (j, slot) in chunk.iter_mut().enumerate() {
                let point = grid.point(offset + j);
                let dot: f64 = point.iter().zip(row).map(|(w, x)| w * x).sum();
                *slot += dot.ln();
            }
        });
        position_best[i] = exec::argmax_first(wealth);
        let log_wealth: f64 = position_best.iter().map(|&(_, v)| v).sum();
        let portfolios: Vec<Portfolio> = (0..k)
            .map(|j| match position_best.get(j) {
                Some(&(g, _)) => grid.portfolio(g),
                None => Portfolio::uniform(m),
            })
            .collect();
        series.push(KccBenchmark {
            k,
            portfolios,
            log_wealth,
        });
    }
    Ok(series)
}

/// Worst-case regret bound of the `k`-parallel universal portfolio against
/// the best `k`-cyclic constant strategy over `n` periods and `m` assets.
///
/// * uniform prior: `k·(m-1)·ln(n+1)`;
/// * Dirichlet(1/2) prior: `(k/2)·(m-1)·ln(n+1) + k·ln 2`.
pub fn regret_bound(k: usize, m: usize, n: usize, density: Density) -> f64 {
    let horizon = ((n + 1) as f64).ln();
    let dimension = (m - 1) as f64;
    let copies = k as f64;
    match density {
        Density::Uniform => copies * dimension * horizon,
        Density::DirichletHalf => {
            0.5 * copies * dimension * horizon + copies * std::f64::consts::LN_2
        }
    }
}

/// Per-period regret of a trace against a prefix series of benchmarks,
/// together with the matching bound values.
///
/// `regret[p] = (benchmark log-wealth - trace log-wealth) / (p+1)` and
/// `bound[p] = regret_bound(k, m, p+1, density) / (p+1)`, both in
/// per-period growth-rate units.
#[derive(Debug, Clone)]
pub struct RegretSeries {
    pub k: usize,
    pub density: Density,
    pub regret: Vec<f64>,
    pub bound: Vec<f64>,
}

impl RegretSeries {
    /// Indices (0-based) where the regret exceeds the bound.
    pub fn violations(&self) -> Vec<usize> {
        (0..self.regret.len())
            .filter(|&p| self.regret[p] > self.bound[p])
            .collect()
    }

    /// The largest regret/bound ratio over the series.
    pub fn max_ratio(&self) -> f64 {
        self.regret
            .iter()
            .zip(&self.bound)
            .map(|(r, b)| r / b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The smallest regret/bound ratio over the series.
    pub fn min_ratio(&self) -> f64 {
        self.regret
            .iter()
            .zip(&self.bound)
            .map(|(r, b)| r / b)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Compares a strategy trace against per-prefix benchmarks and the
/// theoretical bound. `benchmarks[p]` must be the benchmark of the first
/// `p+1` periods, as produced by [`best_kcc_series`].
pub fn check_consistency(
    trace: &StrategyTrace,
    benchmarks: &[KccBenchmark],
    density: Density,
) -> Result<RegretSeries> {
    if trace.n() == 0 {
        return Err(Error::EmptyTrace);
    }
    if benchmarks.len() != trace.n() {
        return Err(Error::LengthMismatch {
            left: benchmarks.len(),
            right: trace.n(),
        });
    }
    let k = benchmarks[0].k;
    let m = trace.portfolios()[0].num_assets();
    let mut regret = Vec::with_capacity(trace.n());
    let mut bound = Vec::with_capacity(trace.n());
    for p in 0..trace.n() {
        if benchmarks[p].k != k {
            return Err(Error::LengthMismatch {
                left: benchmarks[p].k,
                right: k,
            });
        }
        let periods = (p + 1) as f64;
        regret.push((benchmarks[p].log_wealth - trace.log_wealth()[p]) / periods);
        bound.push(regret_bound(k, m, p + 1, density) / periods);
    }
    Ok(RegretSeries {
        k,
        density,
        regret,
        bound,
    })
}

/// Writes a benchmark's portfolios as CSV: `position,w1,…,wm`, positions
/// 1-based, full precision.
pub fn write_benchmark_csv<W: Write>(out: &mut W, benchmark: &KccBenchmark) -> Result<()> {
    let m = benchmark
        .portfolios
        .first()
        .map(Portfolio::num_assets)
        .unwrap_or(0);
    write!(out, "position")?;
    for j in 1..=m {
        write!(out, ",w{j}")?;
    }
    writeln!(out)?;
    for (i, portfolio) in benchmark.portfolios.iter().enumerate() {
        write!(out, "{}", i + 1)?;
        for w in portfolio.weights() {
            write!(out, ",{}", fmt::full(*w))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a regret series as CSV: `n,regret,bound,ratio`, full precision.
pub fn write_regret_csv<W: Write>(out: &mut W, series: &RegretSeries) -> Result<()> {
    writeln!(out, "n,regret,bound,ratio")?;
    for p in 0..series.regret.len() {
        let ratio = series.regret[p] / series.bound[p];
        writeln!(
            out,
            "{},{},{},{}",
            p + 1,
            fmt::full(series.regret[p]),
            fmt::full(series.bound[p]),
            fmt::full(ratio),
        )?;
    }
    Ok(())
}
