//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Validation and I/O failures raised by the library.
///
/// Every variant carries enough context (row, column, outcome index, …) to
/// point at the offending input without re-reading it.
#[derive(Debug, Error)]
pub enum Error {
    /// A portfolio vector failed validation.
    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),

    /// A returns table failed validation.
    #[error("invalid returns: {0}")]
    InvalidReturns(String),

    /// Wealth or report statistics were requested for an empty trace.
    #[error("empty trace")]
    EmptyTrace,

    /// A best-CRP scan was requested for an empty sequence.
    #[error("empty sequence")]
    EmptySequence,

    /// Fewer periods than the operation needs (two price rows to form one
    /// return; two returns to form a standard deviation).
    #[error("insufficient periods (need at least two)")]
    InsufficientPeriods,

    /// Grid step sizes must be reciprocals of a positive integer.
    #[error("step must divide 1 (got {0})")]
    StepNotUnitFraction(f64),

    /// Portfolios need at least two assets to be discretized.
    #[error("need at least two assets (got {0})")]
    TooFewAssets(usize),

    /// The requested lattice would not fit in memory.
    #[error("grid too large: {points} points for {m} assets at step 1/{denominator}")]
    GridTooLarge {
        m: usize,
        denominator: u64,
        points: u128,
    },

    /// An operation that consumes grid weights was given an unweighted grid.
    #[error("grid weights not set; call grid_weights first")]
    GridWeightsNotSet,

    /// Mismatch between the asset counts of two arguments.
    #[error("asset count mismatch: {left} vs {right}")]
    AssetCountMismatch { left: usize, right: usize },

    /// Mismatch between the lengths of two per-period series.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Cyclic decompositions and cyclic strategies need `k >= 1`.
    #[error("cycle length must be at least 1")]
    InvalidCycleLength,

    /// Iterative refinement needs a positive, finite tolerance.
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    /// Malformed CSV input; `row` is 1-based over data rows.
    #[error("price table: {message} (row {row}, column {column})")]
    PriceTable {
        row: usize,
        column: String,
        message: String,
    },

    /// The CSV header did not match the expected wide format.
    #[error("price table header: {0}")]
    PriceHeader(String),

    /// Date labels must be strictly increasing.
    #[error("dates not strictly increasing at row {row}: {previous:?} >= {current:?}")]
    DatesNotIncreasing {
        row: usize,
        previous: String,
        current: String,
    },

    /// A block distribution failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Outcome probabilities must sum to one.
    #[error("probabilities sum to {0}")]
    ProbabilitySum(f64),

    /// A scalar product that must be positive was not.
    #[error("zero scalar product on outcome {outcome}, position {position}")]
    ZeroScalarProduct { outcome: usize, position: usize },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Underlying CSV reader failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// Underlying JSON parse failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
