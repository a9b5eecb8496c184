//! Discretization of the portfolio simplex.
//!
//! The grid is the full rational lattice `{ c/d : c ∈ ℕ^m, Σc = d }` for a
//! step size `1/d`. Points are enumerated in lexicographically ascending
//! order; each coordinate vector of integers sums to `d` exactly, so every
//! point sums to one up to a final float conversion.

use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec;
use crate::fmt;
use crate::portfolio::Portfolio;

/// Hard cap on `points · assets` so a mistyped step cannot exhaust memory.
const MAX_COORDS: u128 = 200_000_000;

/// Prior weight family placed on the grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Density {
    /// Equal mass on every point.
    Uniform,
    /// Mass proportional to the Dirichlet(1/2, …, 1/2) density, evaluated at
    /// the point shrunk toward the centroid (see [`grid_weights`]).
    DirichletHalf,
}

impl FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(Density::Uniform),
            "dirichlet-half" | "dirichlet_half" => Ok(Density::DirichletHalf),
            other => Err(format!(
                "unknown density {other:?}; expected \"uniform\" or \"dirichlet-half\""
            )),
        }
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Density::Uniform => write!(f, "uniform"),
            Density::DirichletHalf => write!(f, "dirichlet-half"),
        }
    }
}

/// A finite set of portfolios on the simplex lattice, with optional prior
/// weights.
///
/// Invariants:
/// * points are pairwise distinct and sorted lexicographically ascending;
/// * every point is a valid portfolio (non-negative, sums to one);
/// * when weights are set there is exactly one strictly positive weight per
///   point and they sum to one.
#[derive(Debug, Clone)]
pub struct PortfolioGrid {
    m: usize,
    denominator: u64,
    coords: Vec<f64>,
    weights: Option<(Density, Vec<f64>)>,
}

impl PortfolioGrid {
    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.coords.len() / self.m
    }

    /// True when the grid has no points (never, for a validly built grid).
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of assets `m`.
    pub fn num_assets(&self) -> usize {
        self.m
    }

    /// The step size `1/denominator`.
    pub fn step(&self) -> f64 {
        1.0 / self.denominator as f64
    }

    /// The integer `d` with step `1/d`.
    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Coordinates of point `g` (0-based, lexicographic rank).
    pub fn point(&self, g: usize) -> &[f64] {
        &self.coords[g * self.m..(g + 1) * self.m]
    }

    /// Iterator over all points in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.m)
    }

    /// Point `g` as an owned, validated portfolio.
    pub fn portfolio(&self, g: usize) -> Portfolio {
        Portfolio::new(self.point(g).to_vec())
            .expect("grid points satisfy portfolio invariants")
    }

    /// Prior weights, if [`grid_weights`] has been applied.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_ref().map(|(_, w)| w.as_slice())
    }

    /// The density the weights were computed from, if set.
    pub fn density(&self) -> Option<Density> {
        self.weights.as_ref().map(|(d, _)| *d)
    }

    /// Closed-form lattice size: `C(d + m - 1, m - 1)` points.
    pub fn lattice_size(m: usize, denominator: u64) -> u128 {
        // Multiplicative binomial evaluation; exact in u128 for any size
        // that could conceivably fit in memory.
        let n = denominator as u128 + m as u128 - 1;
        let k = m as u128 - 1;
        let mut acc: u128 = 1;
        for i in 1..=k {
            acc = acc * (n - k + i) / i;
        }
        acc
    }
}

/// Enumerates the full lattice with step `1/round(1/step)` over `m >= 2`
/// assets, in lexicographically ascending order, weights unset.
///
/// Errors: [`Error::TooFewAssets`] for `m < 2`;
/// [`Error::StepNotUnitFraction`] unless `1/step` is within `1e-9` of a
/// positive integer; [`Error::GridTooLarge`] when the lattice would exceed
/// the memory cap.
pub fn generate_grid(m: usize, step: f64) -> Result<PortfolioGrid> {
    if m < 2 {
        return Err(Error::TooFewAssets(m));
    }
    if !step.is_finite() || step <= 0.0 || step > 1.0 {
        return Err(Error::StepNotUnitFraction(step));
    }
    let inverse = 1.0 / step;
    let denominator = inverse.round();
    if denominator < 1.0 || (inverse - denominator).abs() > 1e-9 {
        return Err(Error::StepNotUnitFraction(step));
    }
    let d = denominator as u64;
    let points = PortfolioGrid::lattice_size(m, d);
    if points.saturating_mul(m as u128) > MAX_COORDS {
        return Err(Error::GridTooLarge {
            m,
            denominator: d,
            points,
        });
    }

    let mut coords = Vec::with_capacity(points as usize * m);
    let mut counts = vec![0u64; m];
    emit_compositions(d, 0, &mut counts, d, &mut coords);
    debug_assert_eq!(coords.len() as u128, points * m as u128);
    Ok(PortfolioGrid {
        m,
        denominator: d,
        coords,
        weights: None,
    })
}

/// Recursively emits all compositions of `remaining` into slots
/// `position..m`, ascending in the leading coordinate, so the overall order
/// is lexicographic on the coordinate vectors.
fn emit_compositions(
    remaining: u64,
    position: usize,
    counts: &mut [u64],
    denominator: u64,
    coords: &mut Vec<f64>,
) {
    if position == counts.len() - 1 {
        counts[position] = remaining;
        let d = denominator as f64;
        coords.extend(counts.iter().map(|&c| c as f64 / d));
        return;
    }
    for c in 0..=remaining {
        counts[position] = c;
        emit_compositions(remaining - c, position + 1, counts, denominator, coords);
    }
}

/// Populates the prior weights of `grid` for `density` and returns it.
///
/// * `Uniform`: every point gets `1/len`.
/// * `DirichletHalf`: point `b` gets mass proportional to
///   `prod_j b'_j^{-1/2}` where `b' = (1-eps)·b + eps·centroid` and
///   `eps = step`; the shrink keeps boundary points finite while preserving
///   the boundary-heavy shape of the Dirichlet(1/2) density.
///
/// Weights are normalized to sum to one.
pub fn grid_weights(mut grid: PortfolioGrid, density: Density) -> PortfolioGrid {
    let len = grid.len();
    let weights = match density {
        Density::Uniform => vec![1.0 / len as f64; len],
        Density::DirichletHalf => {
            let m = grid.m;
            let eps = grid.step();
            let centroid = 1.0 / m as f64;
            let coords = &grid.coords;
            let mut w: Vec<f64> = vec![0.0; len];
            exec::for_each_chunk_mut(&mut w, |offset, chunk| {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    let point = &coords[(offset + j) * m..(offset + j + 1) * m];
                    // prod_j b'_j^{-1/2} computed as one product and one
                    // square root, so mirror-image points (whose shrunk
                    // coordinates are permutations of each other) get
                    // exactly equal mass for m = 2.
                    let mut product = 1.0;
                    for &b in point {
                        product *= (1.0 - eps) * b + eps * centroid;
                    }
                    *slot = 1.0 / product.sqrt();
                }
            });
            let total = exec::sum_chunked(len, |g| w[g]);
            exec::for_each_chunk_mut(&mut w, |_, chunk| {
                for slot in chunk {
                    *slot /= total;
                }
            });
            w
        }
    };
    grid.weights = Some((density, weights));
    grid
}

/// Default step size per asset count: fine grids where they are affordable,
/// a coarse lattice beyond.
pub fn default_grid_step(m: usize) -> f64 {
    match m {
        0..=3 => 0.01,
        4 => 0.025,
        _ => 0.1,
    }
}

/// Writes the grid as CSV: `w1,…,wm,weight` rows in lattice order, full
/// precision. Unweighted grids write an empty weight column.
pub fn write_grid_csv<W: Write>(out: &mut W, grid: &PortfolioGrid) -> Result<()> {
    for j in 1..=grid.num_assets() {
        if j > 1 {
            write!(out, ",")?;
        }
        write!(out, "w{j}")?;
    }
    writeln!(out, ",weight")?;
    for g in 0..grid.len() {
        for (j, w) in grid.point(g).iter().enumerate() {
            if j > 0 {
                write!(out, ",")?;
            }
            write!(out, "{}", fmt::full(*w))?;
        }
        match grid.weights() {
            Some(weights) => writeln!(out, ",{}", fmt::full(weights[g]))?,
            None => writeln!(out, ",")?,
        }
    }
    Ok(())
}
