//! Portfolio vectors on the probability simplex.

use crate::error::{Error, Result};

/// Absolute tolerance on the sum-to-one constraint.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A vector of non-negative asset weights summing to one.
///
/// Invariants (enforced on construction):
/// * at least one asset;
/// * every weight is finite and `>= 0`;
/// * the weights sum to one within [`SUM_TOLERANCE`] (absolute).
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    weights: Vec<f64>,
}

impl Portfolio {
    /// Validates `weights` and wraps them in a portfolio.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPortfolio("no assets".into()));
        }
        for (j, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidPortfolio(format!(
                    "weight {w} at asset {j} is not finite"
                )));
            }
            if w < 0.0 {
                return Err(Error::InvalidPortfolio(format!(
                    "negative weight {w} at asset {j}"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPortfolio(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// The uniform portfolio `(1/m, …, 1/m)`.
    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "uniform portfolio needs at least one asset");
        Self {
            weights: vec![1.0 / m as f64; m],
        }
    }

    /// The vertex portfolio putting all weight on asset `j`.
    pub fn vertex(m: usize, j: usize) -> Self {
        assert!(j < m, "vertex index {j} out of range for {m} assets");
        let mut weights = vec![0.0; m];
        weights[j] = 1.0;
        Self { weights }
    }

    /// Number of assets.
    pub fn num_assets(&self) -> usize {
        self.weights.len()
    }

    /// The weight vector.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Scalar product with a per-asset gross-return row.
    ///
    /// Panics if `row` has a different number of assets.
    pub fn dot(&self, row: &[f64]) -> f64 {
        assert_eq!(
            self.weights.len(),
            row.len(),
            "portfolio and return row have different asset counts"
        );
        self.weights
            .iter()
            .zip(row)
            .map(|(w, x)| w * x)
            .sum()
    }
}
