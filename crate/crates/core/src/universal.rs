//! Universal portfolio mixture and its k-parallel extension.
//!
//! The universal portfolio over a weighted grid plays, at each period, the
//! wealth-weighted average of all grid points:
//!
//! ```text
//! b_{n+1}[j] = Σ_g weight_g · S_n(g) · point_g[j] / Σ_g weight_g · S_n(g)
//! ```
//!
//! where `S_n(g)` is the wealth point `g` would have accumulated on the
//! observations so far. Its wealth equals the weighted average of the grid
//! points' wealths (the mixture identity), so its regret against the best
//! grid point obeys the classical logarithmic bounds.
//!
//! The k-parallel variant (`k`-PUP) runs one independent copy per cyclic
//! position: period `kt + i` is decided by the copy that has seen only the
//! prior observations of position `i`. For the first full cycle every copy
//! is empty and plays the uniform portfolio.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec;
use crate::portfolio::Portfolio;
use crate::returns::ReturnsSequence;
use crate::simplex::PortfolioGrid;
use crate::trace::StrategyTrace;

/// Log-wealth accumulator of every grid point under one observation stream.
///
/// Invariants:
/// * the grid has prior weights set;
/// * `log_wealth_per_point` holds exactly one entry per grid point, all
///   zeros before the first observation.
#[derive(Debug, Clone)]
pub struct UpState {
    grid: Arc<PortfolioGrid>,
    log_wealth: Vec<f64>,
    observations: usize,
}

impl UpState {
    /// Fresh state over `grid`, which must carry prior weights.
    pub fn new(grid: Arc<PortfolioGrid>) -> Result<Self> {
        if grid.weights().is_none() {
            return Err(Error::GridWeightsNotSet);
        }
        let len = grid.len();
        Ok(Self {
            grid,
            log_wealth: vec![0.0; len],
            observations: 0,
        })
    }

    /// The grid this state accumulates over.
    pub fn grid(&self) -> &PortfolioGrid {
        &self.grid
    }

    /// Number of observations folded in so far.
    pub fn observations(&self) -> usize {
        self.observations
    }

    /// Per-point accumulated log-wealth, in grid order.
    pub fn log_wealth_per_point(&self) -> &[f64] {
        &self.log_wealth
    }

    /// Folds one gross-return row into every point's log-wealth.
    ///
    /// Errors unless `x` has one strictly positive, finite entry per asset.
    pub fn observe(&mut self, x: &[f64]) -> Result<()> {
        let m = self.grid.num_assets();
        if x.len() != m {
            return Err(Error::AssetCountMismatch {
                left: x.len(),
                right: m,
            });
        }
        for (j, &v) in x.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidReturns(format!(
                    "nonpositive return {v} at asset {}",
                    j + 1
                )));
            }
        }
        let grid = Arc::clone(&self.grid);
        exec::for_each_chunk_mut(&mut self.log_wealth, |offset, chunk| {
            for (j, slot) in chunk.iter_mut().enumerate() {
                let point = grid.point(offset + j);
                let dot: f64 = point.iter().zip(x).map(|(w, r)| w * r).sum();
                *slot += dot.ln();
            }
        });
        self.observations += 1;
        Ok(())
    }

    /// The wealth-weighted mixture portfolio for the next period.
    ///
    /// Computed with the shifted-exponential trick: per-point factors are
    /// `weight_g · exp(L_g - max L)`, so the mixture is stable for any
    /// horizon. With no observations this is the weighted grid centroid.
    pub fn portfolio(&self) -> Portfolio {
        let m = self.grid.num_assets();
        let weights = self.grid.weights().expect("checked at construction");
        let shift = self
            .log_wealth
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &l| acc.max(l));
        // Fixed-order chunked accumulation of the denominator and the m
        // numerator coordinates.
        let partials = exec::map_chunks(self.grid.len(), |start, end| {
            let mut denominator = 0.0;
            let mut numerator = vec![0.0; m];
            for g in start..end {
                let factor = weights[g] * (self.log_wealth[g] - shift).exp();
                denominator += factor;
                for (slot, &w) in numerator.iter_mut().zip(self.grid.point(g)) {
                    *slot += factor * w;
                }
            }
            (denominator, numerator)
        });
        let mut denominator = 0.0;
        let mut numerator = vec![0.0; m];
        for (d, nums) in partials {
            denominator += d;
            for (slot, v) in numerator.iter_mut().zip(nums) {
                *slot += v;
            }
        }
        let weights_out: Vec<f64> = numerator.iter().map(|v| v / denominator).collect();
        Portfolio::new(weights_out).expect("mixture of simplex points stays on the simplex")
    }

    /// Log of the weighted average of the grid points' wealths,
    /// `ln Σ_g weight_g · exp(L_g)`. By the mixture identity this equals the
    /// log-wealth of the universal portfolio trace over the same
    /// observations.
    pub fn mixture_log_wealth(&self) -> f64 {
        let weights = self.grid.weights().expect("checked at construction");
        let shift = self
            .log_wealth
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &l| acc.max(l));
        if !shift.is_finite() {
            return 0.0;
        }
        let sum = exec::sum_chunked(self.grid.len(), |g| {
            weights[g] * (self.log_wealth[g] - shift).exp()
        });
        shift + sum.ln()
    }

    /// Accumulated log-wealth of the best grid point so far.
    pub fn best_point_log_wealth(&self) -> f64 {
        self.log_wealth
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &l| acc.max(l))
    }
}

/// Runs the k-parallel universal portfolio over `returns`.
///
/// Period `p` (0-based) belongs to cyclic position `i = p mod k` and cycle
/// `t = p div k`. For `t = 0` the strategy plays `(1/m, …, 1/m)`; afterwards
/// it plays the mixture portfolio of position `i`'s state, which has seen
/// exactly the prior rows of position `i`. `k = 1` is the plain universal
/// portfolio.
pub fn run_kpup(
    returns: &ReturnsSequence,
    k: usize,
    grid: &Arc<PortfolioGrid>,
) -> Result<StrategyTrace> {
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
    let mut states: Vec<UpState> = (0..k.min(returns.n().max(1)))
        .map(|_| UpState::new(Arc::clone(grid)))
        .collect::<Result<_>>()?;
    let mut portfolios = Vec::with_capacity(returns.n());
    for p in 0..returns.n() {
        let i = p % k;
        let portfolio = if p < k {
            Portfolio::uniform(m)
        } else {
            states[i].portfolio()
        };
        portfolios.push(portfolio);
        states[i].observe(returns.row(p))?;
    }
    StrategyTrace::from_portfolios(returns, portfolios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{generate_grid, grid_weights, Density};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn weighted_grid(m: usize, step: f64, density: Density) -> Arc<PortfolioGrid> {
        Arc::new(grid_weights(generate_grid(m, step).unwrap(), density))
    }

    #[test]
    fn state_requires_weights() {
        let bare = Arc::new(generate_grid(2, 0.5).unwrap());
        assert!(matches!(
            UpState::new(bare),
            Err(Error::GridWeightsNotSet)
        ));
    }

    #[test]
    fn fresh_state_plays_the_centroid() {
        for density in [Density::Uniform, Density::DirichletHalf] {
            let state = UpState::new(weighted_grid(3, 0.1, density)).unwrap();
            assert_eq!(state.observations(), 0);
            assert!(state.log_wealth_per_point().iter().all(|&l| l == 0.0));
            let b = state.portfolio();
            for &w in b.weights() {
                assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn observe_validates_rows() {
        let mut state = UpState::new(weighted_grid(2, 0.5, Density::Uniform)).unwrap();
        assert!(state.observe(&[1.0]).is_err());
        assert!(state.observe(&[1.0, 0.0]).is_err());
        assert!(state.observe(&[1.0, f64::NAN]).is_err());
        state.observe(&[2.0, 1.0]).unwrap();
        assert_eq!(state.observations(), 1);
    }

    #[test]
    fn one_observation_tilts_toward_the_winner() {
        // Hand oracle on the 3-point grid {(0,1), (.5,.5), (1,0)} after
        // x = (2,1): point wealths are 1, 1.5, 2, so the mixture portfolio is
        // (0·1 + 0.5·1.5 + 1·2) / (1 + 1.5 + 2) = 2.75/4.5 in coordinate 1.
        let mut state = UpState::new(weighted_grid(2, 0.5, Density::Uniform)).unwrap();
        state.observe(&[2.0, 1.0]).unwrap();
        let b = state.portfolio();
        assert_relative_eq!(b.weights()[0], 2.75 / 4.5, max_relative = 1e-14);
        assert_relative_eq!(b.weights()[1], 1.75 / 4.5, max_relative = 1e-14);
    }

    #[test]
    fn one_observation_matches_the_continuum_posterior() {
        // Closed form over the whole simplex for m = 2, uniform density,
        // after observing x = (2, 1):
        //   b[0] = ∫ t(1+t) dt / ∫ (1+t) dt = (5/6)/(3/2) = 5/9.
        // A flat-weighted lattice with step h approximates the integrals
        // with leading-order error h/9 in b[0] (the endpoint masses are
        // double-counted relative to the trapezoid rule), so step 0.01
        // lands within 1.2e-3 and step 0.005 within 6e-4.
        for (step, tol) in [(0.01, 1.2e-3), (0.005, 6e-4)] {
            let mut state = UpState::new(weighted_grid(2, step, Density::Uniform)).unwrap();
            state.observe(&[2.0, 1.0]).unwrap();
            let b = state.portfolio();
            assert_abs_diff_eq!(b.weights()[0], 5.0 / 9.0, epsilon = tol);
            assert_abs_diff_eq!(b.weights()[1], 4.0 / 9.0, epsilon = tol);
        }
    }

    #[test]
    fn mixture_identity_on_a_small_sequence() {
        // The trace's final log-wealth equals the weighted average of the
        // grid point wealths, for both densities.
        let returns = ReturnsSequence::from_rows(&[
            vec![1.3, 0.8],
            vec![0.7, 1.4],
            vec![1.1, 1.0],
            vec![0.9, 1.2],
            vec![1.05, 0.95],
        ])
        .unwrap();
        for density in [Density::Uniform, Density::DirichletHalf] {
            let grid = weighted_grid(2, 0.1, density);
            let trace = run_kpup(&returns, 1, &grid).unwrap();
            let mut state = UpState::new(Arc::clone(&grid)).unwrap();
            for i in 0..returns.n() {
                state.observe(returns.row(i)).unwrap();
            }
            assert_relative_eq!(
                trace.final_log_wealth(),
                state.mixture_log_wealth(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn mixture_wealth_is_dominated_by_the_best_point() {
        let returns =
            ReturnsSequence::from_rows(&[vec![2.0, 1.0], vec![1.5, 0.5], vec![0.8, 1.1]])
                .unwrap();
        let grid = weighted_grid(2, 0.1, Density::Uniform);
        let mut state = UpState::new(grid).unwrap();
        for i in 0..returns.n() {
            state.observe(returns.row(i)).unwrap();
        }
        assert!(state.mixture_log_wealth() < state.best_point_log_wealth());
    }

    #[test]
    fn first_cycle_is_uniform() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![1.0 + 0.1 * i as f64, 1.0]).collect();
        let returns = ReturnsSequence::from_rows(&rows).unwrap();
        let grid = weighted_grid(2, 0.25, Density::Uniform);
        for k in [1, 3, 9] {
            let trace = run_kpup(&returns, k, &grid).unwrap();
            for p in 0..k.min(returns.n()) {
                assert_eq!(
                    trace.portfolios()[p],
                    Portfolio::uniform(2),
                    "k={k} period {p}"
                );
            }
        }
    }

    #[test]
    fn kpup_decisions_replay_per_position() {
        // Under k = 2, the portfolio at period 2t+i must equal the plain
        // mixture fed only the prior rows of position i — bit for bit.
        let rows = vec![
            vec![1.0, 2.0],
            vec![1.0, 0.5],
            vec![1.0, 2.0],
            vec![1.0, 0.5],
            vec![1.0, 2.0],
            vec![1.0, 0.5],
        ];
        let returns = ReturnsSequence::from_rows(&rows).unwrap();
        let grid = weighted_grid(2, 0.1, Density::Uniform);
        let trace = run_kpup(&returns, 2, &grid).unwrap();
        for i in 0..2usize {
            let mut replay = UpState::new(Arc::clone(&grid)).unwrap();
            let mut t = 0;
            loop {
                let p = 2 * t + i;
                if p >= returns.n() {
                    break;
                }
                let expected = if t == 0 {
                    Portfolio::uniform(2)
                } else {
                    replay.portfolio()
                };
                assert_eq!(trace.portfolios()[p], expected, "i={i} t={t}");
                replay.observe(returns.row(p)).unwrap();
                t += 1;
            }
        }
    }

    #[test]
    fn k_one_is_the_plain_universal_portfolio() {
        let rows = vec![
            vec![1.2, 0.9, 1.0],
            vec![0.8, 1.3, 1.1],
            vec![1.0, 0.7, 1.4],
            vec![1.1, 1.0, 0.6],
        ];
        let returns = ReturnsSequence::from_rows(&rows).unwrap();
        let grid = weighted_grid(3, 0.2, Density::DirichletHalf);
        let trace = run_kpup(&returns, 1, &grid).unwrap();
        let mut state = UpState::new(Arc::clone(&grid)).unwrap();
        for p in 0..returns.n() {
            let expected = if p == 0 {
                Portfolio::uniform(3)
            } else {
                state.portfolio()
            };
            assert_eq!(trace.portfolios()[p], expected, "period {p}");
            state.observe(returns.row(p)).unwrap();
        }
    }

    #[test]
    fn run_kpup_validates_arguments() {
        let returns = ReturnsSequence::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let grid = weighted_grid(3, 0.5, Density::Uniform);
        assert!(matches!(
            run_kpup(&returns, 0, &grid),
            Err(Error::InvalidCycleLength)
        ));
        assert!(matches!(
            run_kpup(&returns, 1, &grid),
            Err(Error::AssetCountMismatch { .. })
        ));
    }
}
