//! Rectangular tables of per-period gross returns.

use crate::error::{Error, Result};

/// An `n × m` table of strictly positive gross returns, one row per period.
///
/// Invariants (enforced on construction):
/// * `m >= 1` assets;
/// * the value buffer holds exactly `n·m` entries;
/// * every entry is finite and strictly positive;
/// * when period labels are attached there is exactly one per row.
///
/// `n = 0` is legal: cyclic decompositions may produce empty subsequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsSequence {
    m: usize,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl ReturnsSequence {
    /// Builds a sequence from a flat row-major buffer of `n·m` values.
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidReturns("need at least one asset".into()));
        }
        if values.len() % m != 0 {
            return Err(Error::InvalidReturns(format!(
                "{} values do not form whole rows of {m}",
                values.len()
            )));
        }
        for (idx, &x) in values.iter().enumerate() {
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::InvalidReturns(format!(
                    "nonpositive return {x} at period {}, asset {}",
                    idx / m + 1,
                    idx % m + 1
                )));
            }
        }
        Ok(Self {
            m,
            values,
            labels: None,
        })
    }

    /// Builds a sequence from per-period rows, which must all have the same
    /// positive length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = match rows.first() {
            Some(row) => row.len(),
            None => {
                return Err(Error::InvalidReturns(
                    "cannot infer asset count from zero rows".into(),
                ))
            }
        };
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidReturns(format!(
                    "ragged row {}: expected {m} values, got {}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(m, values)
    }

    /// Attaches one opaque label per period (dates, block indices, …).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.n(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of periods.
    pub fn n(&self) -> usize {
        self.values.len() / self.m
    }

    /// Number of assets.
    pub fn m(&self) -> usize {
        self.m
    }

    /// The gross-return row of period `i` (0-based).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// Iterator over all period rows in order.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m)
    }

    /// Flat row-major view of all values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Period labels, if attached.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The label of period `i`, falling back to the 1-based period index.
    pub fn label_or_index(&self, i: usize) -> String {
        match &self.labels {
            Some(labels) => labels[i].clone(),
            None => (i + 1).to_string(),
        }
    }
}
