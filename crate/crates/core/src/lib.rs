//! Growth-optimal portfolio selection toolkit.
//!
//! The crate provides:
//!
//! * [`portfolio`] / [`returns`] / [`trace`] — domain types: simplex-valued
//!   portfolio vectors, rectangular tables of strictly positive gross
//!   returns, and wealth accounting for a sequence of portfolio decisions.
//! * [`simplex`] — discretization of the portfolio simplex into an exact
//!   rational lattice, with uniform or Dirichlet(1/2) prior weights.
//! * [`market`] — CSV price ingestion and the cyclic decomposition of a
//!   return sequence into `k` interleaved subsequences.
//! * [`universal`] — the universal-portfolio mixture estimator and its
//!   `k`-parallel extension (`k`-PUP) that runs one independent copy per
//!   cyclic position.
//! * [`hindsight`] — hindsight benchmarks (best constant-rebalanced
//!   portfolio, best `k`-cyclic constant strategy), worst-case regret
//!   bounds, and consistency checks of a learner against its bound.
//! * [`kelly`] — log-optimal investment for finite-support block-wise
//!   i.i.d. markets: the `k`-position log-optimal tuple, its
//!   Kuhn–Tucker-style optimality certificate, the optimal growth rate,
//!   and a seeded market simulator.
//!
//! # Numerics
//!
//! All wealth accounting is done in natural-log domain; mixtures of
//! exponentially large or small quantities use the shifted-exponential
//! trick. Every data-parallel reduction is chunked in a fixed order
//! (fixed 1024-element chunks, partials combined in chunk order), so
//! results are bit-identical across thread counts and across the parallel
//! and sequential builds.

pub mod error;
mod exec;
pub mod fmt;
pub mod hindsight;
pub mod kelly;
pub mod market;
mod optimize;
pub mod portfolio;
pub mod returns;
pub mod simplex;
pub mod trace;
pub mod universal;

pub use error::{Error, Result};
pub use portfolio::Portfolio;
pub use returns::ReturnsSequence;
pub use simplex::{generate_grid, grid_weights, Density, PortfolioGrid};
pub use trace::{performance_report, wealth_and_growth, PerformanceReport, StrategyTrace};
