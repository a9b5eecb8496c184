//! Growth-optimal investment for block-wise i.i.d. markets.
//!
//! The market draws one of finitely many return blocks per cycle: a block
//! fixes the return rows of all `k` cyclic positions at once, so positions
//! may be arbitrarily coupled across a block while blocks themselves are
//! independent and identically distributed.
//!
//! Because the expected log-growth of a cyclic strategy is additively
//! separable across positions, the growth-optimal tuple solves `k`
//! independent concave problems, one per position marginal — couplings
//! inside the block never mix into the objective. Optimality of a candidate
//! tuple `c` is certified without re-solving anything: for every competitor
//! tuple `b`,
//!
//! ```text
//! E[ prod_i ( <b_i, X_i> / <c_i, X_i> )^(1/k) ] <= 1
//! ```
//!
//! holds exactly when `c` is the growth-optimal tuple (with equality at
//! `b = c`), so a maximum over trial tuples that stays at or below one is a
//! proof of optimality up to numerical tolerance.

use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::optimize;
use crate::portfolio::Portfolio;
use crate::returns::ReturnsSequence;
use crate::simplex::{default_grid_step, generate_grid};

/// Largest tolerated deviation of the outcome probabilities from summing to
/// exactly one; anything within is renormalized, anything beyond is an
/// error.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// A finite-support distribution over return blocks.
///
/// Each of the `support_len()` outcomes carries a probability and a `k × m`
/// block of gross returns: row `i` of the block is the return vector the
/// market posts at cyclic position `i` when that outcome is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistribution {
    k: usize,
    m: usize,
    probs: Vec<f64>,
    /// Outcome-major, then position-major: entry `(s, i, j)` lives at
    /// `s*k*m + i*m + j`.
    blocks: Vec<f64>,
}

impl BlockDistribution {
    /// Validates and builds a distribution from `(probability, block)`
    /// pairs, each block flattened position-major to `k*m` entries.
    ///
    /// Probabilities must be strictly positive and sum to one within
    /// [`PROBABILITY_TOLERANCE`]; they are renormalized to sum to one
    /// exactly (up to rounding). Returns must be finite and strictly
    /// positive. Outcomes must be distinct: two bitwise-identical blocks
    /// are rejected because they denote the same outcome split in two.
    pub fn new(k: usize, m: usize, support: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution(
                "k must be at least 1".to_string(),
            ));
        }
        if m == 0 {
            return Err(Error::InvalidDistribution(
                "m must be at least 1".to_string(),
            ));
        }
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".to_string()));
        }
        let mut probs = Vec::with_capacity(support.len());
        let mut blocks = Vec::with_capacity(support.len() * k * m);
        for (s, (prob, block)) in support.iter().enumerate() {
            if !prob.is_finite() || *prob <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {}: probability must be finite and strictly positive, got {prob}",
                    s + 1
                )));
            }
            if block.len() != k * m {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {}: block has {} entries, expected k*m = {}",
                    s + 1,
                    block.len(),
                    k * m
                )));
            }
            for (e, &x) in block.iter().enumerate() {
                if !x.is_finite() || x <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "outcome {}: return at position {}, asset {} must be finite and strictly positive, got {x}",
                        s + 1,
                        e / m + 1,
                        e % m + 1
                    )));
                }
            }
            probs.push(*prob);
            blocks.extend_from_slice(block);
        }
        for s in 0..support.len() {
            for t in s + 1..support.len() {
                if blocks[s * k * m..(s + 1) * k * m] == blocks[t * k * m..(t + 1) * k * m] {
                    return Err(Error::InvalidDistribution(format!(
                        "outcomes {} and {} have identical blocks",
                        s + 1,
                        t + 1
                    )));
                }
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::ProbabilitySum(sum));
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Self { k, m, probs, blocks })
    }

    /// Block length (periods per cycle).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of assets.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of outcomes in the support.
    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Renormalized outcome probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of outcome `s`.
    pub fn prob(&self, s: usize) -> f64 {
        self.probs[s]
    }

    /// The full `k*m` block of outcome `s`, position-major.
    pub fn block(&self, s: usize) -> &[f64] {
        &self.blocks[s * self.k * self.m..(s + 1) * self.k * self.m]
    }

    /// The return row of outcome `s` at cyclic position `i`.
    pub fn row(&self, s: usize, i: usize) -> &[f64] {
        let start = s * self.k * self.m + i * self.m;
        &self.blocks[start..start + self.m]
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    k: usize,
    m: usize,
    support: Vec<RawOutcome>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    prob: f64,
    block: Vec<Vec<f64>>,
}

/// Parses a block distribution from JSON of the form
///
/// ```json
/// {
///   "k": 2,
///   "m": 2,
///   "support": [
///     { "prob": 0.5, "block": [[2.0, 1.0], [0.5, 1.0]] },
///     { "prob": 0.5, "block": [[1.0, 1.0], [1.5, 1.0]] }
///   ]
/// }
/// ```
///
/// where each block lists `k` rows of `m` gross returns.
pub fn parse_distribution<R: Read>(reader: R) -> Result<BlockDistribution> {
    let raw: RawDistribution = serde_json::from_reader(reader)?;
    let mut support = Vec::with_capacity(raw.support.len());
    for (s, outcome) in raw.support.into_iter().enumerate() {
        if raw.k != 0 && outcome.block.len() != raw.k {
            return Err(Error::InvalidDistribution(format!(
                "outcome {}: block has {} rows, expected k = {}",
                s + 1,
                outcome.block.len(),
                raw.k
            )));
        }
        let mut flat = Vec::with_capacity(raw.k * raw.m);
        for (i, row) in outcome.block.iter().enumerate() {
            if raw.m != 0 && row.len() != raw.m {
                return Err(Error::InvalidDistribution(format!(
                    "outcome {}: block row {} has {} entries, expected m = {}",
                    s + 1,
                    i + 1,
                    row.len(),
                    raw.m
                )));
            }
            flat.extend_from_slice(row);
        }
        support.push((outcome.prob, flat));
    }
    BlockDistribution::new(raw.k, raw.m, support)
}

/// [`parse_distribution`] for a file path.
pub fn parse_distribution_path(path: &Path) -> Result<BlockDistribution> {
    let file = std::fs::File::open(path)?;
    parse_distribution(std::io::BufReader::new(file))
}

/// A growth-optimal tuple: one portfolio per cyclic position and the
/// optimal per-period growth rate they achieve together.
#[derive(Debug, Clone)]
pub struct KLogOptimal {
    pub portfolios: Vec<Portfolio>,
    pub rate: f64,
}

/// Marginal return rows of position `i`, outcome-major, flattened.
fn marginal_rows(dist: &BlockDistribution, i: usize) -> Vec<f64> {
    let mut rows = Vec::with_capacity(dist.support_len() * dist.m());
    for s in 0..dist.support_len() {
        rows.extend_from_slice(dist.row(s, i));
    }
    rows
}

/// Computes the growth-optimal tuple by solving the `k` position marginals
/// independently: a full scan of the default grid seeds each problem, then
/// projected gradient ascent (stopping tolerance `tol`) and an active-set
/// Newton polish drive it to the stationary point.
pub fn k_log_optimal(dist: &BlockDistribution, tol: f64) -> Result<KLogOptimal> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidTolerance(tol));
    }
    let m = dist.m();
    let mut portfolios = Vec::with_capacity(dist.k());
    if m == 1 {
        portfolios = vec![Portfolio::new(vec![1.0])?; dist.k()];
    } else {
        let grid = generate_grid(m, default_grid_step(m))?;
        for i in 0..dist.k() {
            let rows = marginal_rows(dist, i);
            let objectives: Vec<f64> = exec::map_chunks(grid.len(), |start, end| {
                (start..end)
                    .map(|g| optimize::objective(&rows, dist.probs(), grid.point(g)))
                    .collect::<Vec<f64>>()
            })
            .into_iter()
            .flatten()
            .collect();
            let (seed, _) = exec::argmax_first(&objectives);
            let refined = optimize::refine(&rows, dist.probs(), grid.point(seed), tol, true);
            portfolios.push(Portfolio::new(refined)?);
        }
    }
    let rate = optimal_growth_rate(dist, &portfolios)?;
    Ok(KLogOptimal { portfolios, rate })
}

/// Per-period expected log-growth of playing the cycle `portfolios` on
/// `dist`: `(1/k) * sum_s p_s * sum_i ln <b_i, x_{s,i}>`.
pub fn optimal_growth_rate(dist: &BlockDistribution, portfolios: &[Portfolio]) -> Result<f64> {
    if portfolios.len() != dist.k() {
        return Err(Error::LengthMismatch {
            left: portfolios.len(),
            right: dist.k(),
        });
    }
    let mut total = 0.0;
    for (s, &p) in dist.probs().iter().enumerate() {
        let mut block_log = 0.0;
        for (i, portfolio) in portfolios.iter().enumerate() {
            if portfolio.num_assets() != dist.m() {
                return Err(Error::AssetCountMismatch {
                    left: portfolio.num_assets(),
                    right: dist.m(),
                });
            }
            let dot = portfolio.dot(dist.row(s, i));
            if dot <= 0.0 {
                return Err(Error::ZeroScalarProduct {
                    outcome: s + 1,
                    position: i + 1,
                });
            }
            block_log += dot.ln();
        }
        total += p * block_log;
    }
    Ok(total / dist.k() as f64)
}

/// Evaluates the optimality certificate of `candidate`: the maximum over
/// `tests` of
///
/// ```text
/// E[ prod_i ( <test_i, X_i> / <candidate_i, X_i> )^(1/k) ]
/// ```
///
/// At the growth-optimal tuple this expectation is at most one for every
/// competitor tuple, with equality when the test equals the candidate; any
/// value above one witnesses that the candidate is not optimal.
pub fn kt_certificate(
    dist: &BlockDistribution,
    candidate: &[Portfolio],
    tests: &[Vec<Portfolio>],
) -> Result<f64> {
    if candidate.len() != dist.k() {
        return Err(Error::LengthMismatch {
            left: candidate.len(),
            right: dist.k(),
        });
    }
    if tests.is_empty() {
        return Err(Error::EmptySequence);
    }
    let k = dist.k();
    let support = dist.support_len();
    // Denominators depend only on the candidate: one per (outcome, position).
    let mut denominators = vec![0.0; support * k];
    for (i, portfolio) in candidate.iter().enumerate() {
        if portfolio.num_assets() != dist.m() {
            return Err(Error::AssetCountMismatch {
                left: portfolio.num_assets(),
                right: dist.m(),
            });
        }
        for s in 0..support {
            let dot = portfolio.dot(dist.row(s, i));
            if dot <= 0.0 {
                return Err(Error::ZeroScalarProduct {
                    outcome: s + 1,
                    position: i + 1,
                });
            }
            denominators[s * k + i] = dot;
        }
    }
    for tuple in tests {
        if tuple.len() != k {
            return Err(Error::LengthMismatch {
                left: tuple.len(),
                right: k,
            });
        }
        for portfolio in tuple {
            if portfolio.num_assets() != dist.m() {
                return Err(Error::AssetCountMismatch {
                    left: portfolio.num_assets(),
                    right: dist.m(),
                });
            }
        }
    }
    let exponent = 1.0 / k as f64;
    let expectations = exec::map_chunks(tests.len(), |start, end| {
        (start..end)
            .map(|t| {
                let tuple = &tests[t];
                let mut expectation = 0.0;
                for s in 0..support {
                    let mut product = 1.0;
                    for (i, portfolio) in tuple.iter().enumerate() {
                        let ratio = portfolio.dot(dist.row(s, i)) / denominators[s * k + i];
                        product *= if k == 1 { ratio } else { ratio.powf(exponent) };
                    }
                    expectation += dist.prob(s) * product;
                }
                expectation
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect::<Vec<f64>>();
    Ok(expectations.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Samples `blocks` i.i.d. blocks from `dist` and concatenates them into a
/// returns sequence of `blocks * k` periods.
///
/// The generator is ChaCha8 seeded via `seed_from_u64`; its stream is fixed
/// by the seed alone; the sampled sequence is reproducible across
/// platforms, thread counts, and builds. Outcomes are selected by inverse
/// transform: one uniform draw in `[0, 1)` per block against the cumulative
/// probabilities, in support order.
pub fn simulate_market(
    dist: &BlockDistribution,
    blocks: usize,
    seed: u64,
) -> Result<ReturnsSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(dist.support_len());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cumulative.push(acc);
    }
    let mut values = Vec::with_capacity(blocks * dist.k() * dist.m());
    for _ in 0..blocks {
        let u: f64 = rng.random();
        // The last bucket absorbs any rounding shortfall of the cumsum.
        let mut outcome = dist.support_len() - 1;
        for (s, &edge) in cumulative.iter().enumerate() {
            if u < edge {
                outcome = s;
                break;
            }
        }
        values.extend_from_slice(dist.block(outcome));
    }
    ReturnsSequence::new(dist.m(), values)
}
