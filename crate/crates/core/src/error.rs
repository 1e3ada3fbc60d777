//! Error type shared across the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("invalid day structure: {0}")]
    InvalidDayStructure(String),

    #[error("non-positive price {value} at day {day}, minute {minute}")]
    NonPositivePrice { day: usize, minute: usize, value: f64 },

    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("path contains no usable observations")]
    EmptyPath,

    #[error("path has no day boundaries")]
    NoDayBoundaries,

    #[error("no completed sojourns observed for states {states:?}")]
    UnobservedStates { states: Vec<usize> },

    #[error("observed sojourn {observed} exceeds horizon t_max = {t_max}")]
    SojournExceedsHorizon { observed: usize, t_max: usize },

    #[error("row {row} is not a probability distribution (sum = {sum})")]
    NonStochasticRow { row: usize, sum: f64 },

    #[error("matrix has nonzero diagonal at row {row}")]
    NonzeroDiagonal { row: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("backward precondition violated: H_{{{state}}}({v}) = 1")]
    BackwardPrecondition { state: usize, v: usize },

    #[error("embedded chain is reducible; strongly connected components: {components:?}")]
    ReducibleChain { components: Vec<Vec<usize>> },

    #[error("accumulation grid size {size} exceeds cap {cap}; use a coarser epsilon_log or a smaller rho")]
    GridCapExceeded { size: usize, cap: usize },

    #[error("test statistic undefined: g(1) = {g1} must lie strictly between 0 and 1")]
    StatisticUndefined { g1: f64 },

    #[error("no transitions observed from state {i} to state {j}")]
    NoTransitions { i: usize, j: usize },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
