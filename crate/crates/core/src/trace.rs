//! Wealth accounting for a sequence of portfolio decisions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt;
use crate::portfolio::Portfolio;
use crate::returns::ReturnsSequence;

/// The realized path of a strategy: one portfolio per period together with
/// the per-period gross return it earned and the running log-wealth.
///
/// Invariants (true by construction):
/// * the three series have equal length `n`;
/// * `period_returns[i]` is the scalar product of `portfolios[i]` with the
///   period-`i` return row, hence strictly positive;
/// * `log_wealth[i] = log_wealth[i-1] + ln(period_returns[i])`, starting
///   from `ln(period_returns[0])`.
#[derive(Debug, Clone)]
pub struct StrategyTrace {
    portfolios: Vec<Portfolio>,
    period_returns: Vec<f64>,
    log_wealth: Vec<f64>,
}

impl StrategyTrace {
    /// Plays `portfolios[i]` against period `i` of `returns`.
    pub fn from_portfolios(
        returns: &ReturnsSequence,
        portfolios: Vec<Portfolio>,
    ) -> Result<Self> {
        if portfolios.len() != returns.n() {
            return Err(Error::LengthMismatch {
                left: portfolios.len(),
                right: returns.n(),
            });
        }
        let mut period_returns = Vec::with_capacity(portfolios.len());
        let mut log_wealth = Vec::with_capacity(portfolios.len());
        let mut acc = 0.0;
        for (i, portfolio) in portfolios.iter().enumerate() {
            if portfolio.num_assets() != returns.m() {
                return Err(Error::AssetCountMismatch {
                    left: portfolio.num_assets(),
                    right: returns.m(),
                });
            }
            let r = portfolio.dot(returns.row(i));
            acc += r.ln();
            period_returns.push(r);
            log_wealth.push(acc);
        }
        Ok(Self {
            portfolios,
            period_returns,
            log_wealth,
        })
    }

    /// Plays the fixed cycle `cycle[0], …, cycle[k-1], cycle[0], …` against
    /// the whole sequence: period `i` (0-based) uses `cycle[i mod k]`.
    pub fn from_cycle(returns: &ReturnsSequence, cycle: &[Portfolio]) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidCycleLength);
        }
        let portfolios = (0..returns.n())
            .map(|i| cycle[i % cycle.len()].clone())
            .collect();
        Self::from_portfolios(returns, portfolios)
    }

    /// Number of periods.
    pub fn n(&self) -> usize {
        self.portfolios.len()
    }

    /// The portfolio played each period.
    pub fn portfolios(&self) -> &[Portfolio] {
        &self.portfolios
    }

    /// The gross return earned each period.
    pub fn period_returns(&self) -> &[f64] {
        &self.period_returns
    }

    /// Running natural-log wealth after each period (start capital 1).
    pub fn log_wealth(&self) -> &[f64] {
        &self.log_wealth
    }

    /// Log-wealth after the last period; `0` for an empty trace.
    pub fn final_log_wealth(&self) -> f64 {
        self.log_wealth.last().copied().unwrap_or(0.0)
    }
}

/// Final wealth `S_n` and per-period growth rate `ln(S_n)/n` of a trace.
///
/// Errors with [`Error::EmptyTrace`] when the trace has no periods.
pub fn wealth_and_growth(trace: &StrategyTrace) -> Result<(f64, f64)> {
    if trace.n() == 0 {
        return Err(Error::EmptyTrace);
    }
    let log_w = trace.final_log_wealth();
    Ok((log_w.exp(), log_w / trace.n() as f64))
}

/// Summary statistics of a strategy trace.
///
/// `sharpe_ratio` is the mean gross return divided by the population
/// (`1/n`) standard deviation of the gross returns — no risk-free leg, no
/// annualization. A constant return series has zero standard deviation and
/// reports `+inf` as a sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub final_wealth: f64,
    pub growth_rate: f64,
    pub average_return: f64,
    pub sharpe_ratio: f64,
}

/// Header of the summary-report CSV schema.
pub const REPORT_CSV_HEADER: &str =
    "strategy,final_wealth,growth_rate,average_return,sharpe_ratio";

impl PerformanceReport {
    /// One CSV row under [`REPORT_CSV_HEADER`], six decimal places.
    pub fn csv_row(&self, strategy: &str) -> String {
        format!(
            "{strategy},{},{},{},{}",
            fmt::report(self.final_wealth),
            fmt::report(self.growth_rate),
            fmt::report(self.average_return),
            fmt::report(self.sharpe_ratio),
        )
    }
}

/// Computes the summary statistics of a trace with at least two periods
/// (a standard deviation needs two observations to mean anything).
pub fn performance_report(trace: &StrategyTrace) -> Result<PerformanceReport> {
    if trace.n() < 2 {
        return Err(Error::InsufficientPeriods);
    }
    let (final_wealth, growth_rate) = wealth_and_growth(trace)?;
    let n = trace.n() as f64;
    let mean = trace.period_returns().iter().sum::<f64>() / n;
    let var = trace
        .period_returns()
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    let sharpe_ratio = if std == 0.0 { f64::INFINITY } else { mean / std };
    Ok(PerformanceReport {
        final_wealth,
        growth_rate,
        average_return: mean,
        sharpe_ratio,
    })
}

/// Writes a trace as CSV: `period,w1,…,wm,period_return,log_wealth` with one
/// row per period at full (17 significant digits) precision. The period
/// column carries `labels` when given, otherwise the 1-based index.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    trace: &StrategyTrace,
    labels: Option<&[String]>,
) -> Result<()> {
    if let Some(labels) = labels {
        if labels.len() != trace.n() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: trace.n(),
            });
        }
    }
    let m = trace
        .portfolios()
        .first()
        .map(Portfolio::num_assets)
        .unwrap_or(0);
    write!(out, "period")?;
    for j in 1..=m {
        write!(out, ",w{j}")?;
    }
    writeln!(out, ",period_return,log_wealth")?;
    for i in 0..trace.n() {
        match labels {
            Some(labels) => write!(out, "{}", labels[i])?,
            None => write!(out, "{}", i + 1)?,
        }
        for w in trace.portfolios()[i].weights() {
            write!(out, ",{}", fmt::full(*w))?;
        }
        writeln!(
            out,
            ",{},{}",
            fmt::full(trace.period_returns()[i]),
            fmt::full(trace.log_wealth()[i]),
        )?;
    }
    Ok(())
}
