use thiserror::Error;

use crate::exactnum::{render_rational, Rational};
use crate::orders::Order;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed number: {0:?}")]
    MalformedNumber(String),

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// 1-based (row, column) of the offending entry.
    #[error("negative entry at row {0}, column {1}")]
    NegativeEntry(usize, usize),

    /// 1-based row index and the actual row sum.
    #[error("row {0} sums to {sum} instead of 1", sum = render_rational(.1))]
    RowSumNotOne(usize, Rational),

    #[error("empty experiment: at least one state and one realization are required")]
    EmptyExperiment,

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("prior must put positive probability on every state")]
    NonInteriorPrior,

    #[error("experiments have different state counts ({0} vs {1})")]
    StateCountMismatch(usize, usize),

    #[error("{count} realizations exceed the subset-sum cap of {cap}")]
    TooManyRealizations { count: usize, cap: usize },

    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),

    #[error("invalid utility: {0}")]
    InvalidUtility(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("invalid bounds for variable {0}: lower exceeds upper")]
    InvalidBounds(usize),

    #[error("{0} dominance holds, so no counterexample exists")]
    OrderActuallyHolds(Order),

    #[error("no strict reversal found for the {0} witness")]
    NoReversal(Order),

    #[error("column {0} has an unbounded per-column maximum")]
    UnboundedColumn(usize),

    #[error("invalid JSON: {0}")]
    Json(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unexpected solver outcome: {0}")]
    Solver(String),
}
