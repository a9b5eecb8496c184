//! Concave maximization of weighted log-returns over the simplex.
//!
//! The objective is `f(b) = sum_i q_i · ln⟨b, x_i⟩` for strictly positive
//! rows `x_i` and weights `q_i > 0` with `Σq = 1`. It is concave on the
//! simplex, so a projected gradient ascent converges to the global maximum.
//!
//! Two refinement stages are provided:
//!
//! * [`gradient_ascent`] — projected gradient ascent with a backtracking
//!   line search (step halved until ascent, floor `1e-16`), terminating
//!   once the per-iteration objective improvement drops below `tol`.
//! * [`polish`] — an active-set Newton step on the stationarity system
//!   `sum_i q_i x_{ij} / ⟨b, x_i⟩ = 1` over the support of the iterate,
//!   driving the optimum to floating-point accuracy when the gradient
//!   method has located the right face of the simplex. Used where
//!   certificate-grade accuracy is required.

use crate::exec;

/// Euclidean projection of `v` onto the probability simplex (sort-based).
///
/// Returns the closest point of the simplex in the Euclidean norm.
/// Coordinates clipped by the projection come out exactly zero.
pub(crate) fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("projection input must not be NaN"));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    let mut support = 0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
            support = i + 1;
        }
    }
    debug_assert!(support > 0, "projection support must be non-empty");
    v.iter().map(|&u| (u - threshold).max(0.0)).collect()
}

/// The weighted-log objective `sum_i q_i ln⟨b, x_i⟩`.
///
/// `rows` is row-major `n × m`; `weights` has length `n`.
pub(crate) fn objective(rows: &[f64], weights: &[f64], b: &[f64]) -> f64 {
    let m = b.len();
    let n = weights.len();
    exec::sum_chunked(n, |i| {
        let row = &rows[i * m..(i + 1) * m];
        let dot: f64 = row.iter().zip(b).map(|(x, w)| x * w).sum();
        weights[i] * dot.ln()
    })
}

/// Gradient of [`objective`]: `sum_i q_i x_i / ⟨b, x_i⟩`.
fn gradient(rows: &[f64], weights: &[f64], b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let mut g = vec![0.0; m];
    for (i, &q) in weights.iter().enumerate() {
        let row = &rows[i * m..(i + 1) * m];
        let dot: f64 = row.iter().zip(b).map(|(x, w)| x * w).sum();
        let scale = q / dot;
        for (slot, &x) in g.iter_mut().zip(row) {
            *slot += scale * x;
        }
    }
    g
}

/// Smallest line-search step before giving up on an iteration.
const STEP_FLOOR: f64 = 1e-16;
/// Iteration cap; generous, the line search is cheap at these sizes.
const MAX_ITERATIONS: usize = 10_000;

/// Projected gradient ascent from `initial`, stopping when an accepted step
/// improves the objective by less than `tol` (or no step ascends).
pub(crate) fn gradient_ascent(
    rows: &[f64],
    weights: &[f64],
    initial: &[f64],
    tol: f64,
) -> Vec<f64> {
    let mut b = project_to_simplex(initial);
    let mut value = objective(rows, weights, &b);
    for _ in 0..MAX_ITERATIONS {
        let g = gradient(rows, weights, &b);
        let mut step = 1.0;
        let mut accepted = None;
        while step >= STEP_FLOOR {
            let candidate: Vec<f64> = b
                .iter()
                .zip(&g)
                .map(|(w, grad)| w + step * grad)
                .collect();
            let candidate = project_to_simplex(&candidate);
            let candidate_value = objective(rows, weights, &candidate);
            if candidate_value > value {
                accepted = Some((candidate, candidate_value));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((next, next_value)) => {
                let improvement = next_value - value;
                b = next;
                value = next_value;
                if improvement < tol {
                    break;
                }
            }
            None => break,
        }
    }
    b
}

/// Solves the dense system `A x = rhs` in place by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `1e-13` (the
/// system is numerically singular).
fn solve_dense(a: &mut [Vec<f64>], rhs: &mut [f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// KKT residual on the active set: `F_j = sum_i q_i x_ij / ⟨b, x_i⟩ - 1`.
fn stationarity_residual(rows: &[f64], weights: &[f64], b: &[f64], active: &[usize]) -> Vec<f64> {
    let g = gradient(rows, weights, b);
    active.iter().map(|&j| g[j] - 1.0).collect()
}

/// Newton refinement of a near-optimal iterate to floating-point accuracy.
///
/// Keeps the support (set of strictly positive coordinates) fixed, solves
/// the equality-constrained stationarity system restricted to it, and
/// afterwards verifies first-order optimality of the excluded coordinates.
/// Falls back to the input whenever the system is singular, a step leaves
/// the simplex, or the polished point fails to match the input's objective.
pub(crate) fn polish(rows: &[f64], weights: &[f64], b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let input_value = objective(rows, weights, b);
    let mut active: Vec<usize> = (0..m).filter(|&j| b[j] > 1e-9).collect();

    // Allow a few support changes: a coordinate pushed negative leaves the
    // active set; an excluded coordinate with positive reduced gradient
    // re-enters.
    for _ in 0..=m {
        let Some(candidate) = newton_on_support(rows, weights, b, &active) else {
            return b.to_vec();
        };
        // Verify the excluded coordinates satisfy the first-order condition
        // sum_i q_i x_ij / ⟨b, x_i⟩ <= 1 (within a small slack).
        let g = gradient(rows, weights, &candidate);
        let violated: Vec<usize> = (0..m)
            .filter(|j| !active.contains(j) && g[*j] > 1.0 + 1e-10)
            .collect();
        if violated.is_empty() {
            let polished_value = objective(rows, weights, &candidate);
            if polished_value >= input_value - 1e-13 {
                return candidate;
            }
            return b.to_vec();
        }
        active.extend(violated);
        active.sort_unstable();
    }
    b.to_vec()
}

/// Newton iterations for the stationarity system on a fixed support.
/// Returns a valid simplex point or `None` when the iteration fails.
fn newton_on_support(
    rows: &[f64],
    weights: &[f64],
    b: &[f64],
    active: &[usize],
) -> Option<Vec<f64>> {
    let m = b.len();
    if active.is_empty() {
        return None;
    }
    let mut x = vec![0.0; m];
    if active.len() == 1 {
        x[active[0]] = 1.0;
        return Some(x);
    }
    // Start from the input restricted to the support, renormalized. A small
    // floor keeps coordinates that just (re-)entered the support strictly
    // inside the face, so the damped Newton step is not pinned at zero.
    let total: f64 = active.iter().map(|&j| b[j].max(1e-6)).sum();
    for &j in active {
        x[j] = b[j].max(1e-6) / total;
    }

    let a = active.len();
    for _ in 0..60 {
        let residual = stationarity_residual(rows, weights, &x, active);
        let max_residual = residual.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        if max_residual < 1e-14 {
            break;
        }
        // Bordered system: [H 1; 1ᵀ 0] [δ; ν] = [-F; 0] with
        // H_{jl} = -sum_i q_i x_ij x_il / ⟨x, x_i⟩² (the objective Hessian).
        let mut matrix = vec![vec![0.0; a + 1]; a + 1];
        for (i, &q) in weights.iter().enumerate() {
            let row = &rows[i * m..(i + 1) * m];
            let dot: f64 = row.iter().zip(&x).map(|(v, w)| v * w).sum();
            let scale = q / (dot * dot);
            for (r, &jr) in active.iter().enumerate() {
                for (c, &jc) in active.iter().enumerate() {
                    matrix[r][c] -= scale * row[jr] * row[jc];
                }
            }
        }
        for r in 0..a {
            matrix[r][a] = 1.0;
            matrix[a][r] = 1.0;
        }
        let mut rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        rhs.push(0.0);
        let delta = solve_dense(&mut matrix, &mut rhs)?;

        // Damped update: stay strictly inside the face.
        let mut scale: f64 = 1.0;
        for (r, &j) in active.iter().enumerate() {
            if delta[r] < 0.0 {
                let limit = -0.95 * x[j] / delta[r];
                scale = scale.min(limit);
            }
        }
        if !scale.is_finite() || scale <= 0.0 {
            return None;
        }
        for (r, &j) in active.iter().enumerate() {
            x[j] += scale * delta[r];
        }
        // Exact renormalization over the support.
        let total: f64 = active.iter().map(|&j| x[j]).sum();
        if total <= 0.0 {
            return None;
        }
        for &j in active {
            x[j] /= total;
        }
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return None;
    }
    Some(x)
}

/// Full refinement: projected gradient ascent, optionally followed by the
/// Newton polish.
pub(crate) fn refine(
    rows: &[f64],
    weights: &[f64],
    initial: &[f64],
    tol: f64,
    newton: bool,
) -> Vec<f64> {
    let coarse = gradient_ascent(rows, weights, initial, tol);
    if newton {
        polish(rows, weights, &coarse)
    } else {
        coarse
    }
}
