use thiserror::Error;

/// Errors produced while building or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("zero coefficient in row {row}, column {col}")]
    ZeroCoefficient { row: usize, col: usize },

    #[error("duplicate coefficient for row {row}, column {col}")]
    DuplicateCoefficient { row: usize, col: usize },

    #[error("column index {col} out of range (n = {n})")]
    ColumnOutOfRange { col: usize, n: usize },

    #[error("instance has no rows")]
    EmptyInstance,

    #[error("column {col} is one-sided; prune the instance first")]
    OneSidedColumn { col: usize },

    #[error("minimizer set in coordinate {col} is unbounded")]
    UnboundedMinimizerSet { col: usize },

    #[error("objective is unbounded below in coordinate {col}")]
    UnboundedBelow { col: usize },

    #[error("invalid update order: not a permutation of 0..{n}")]
    InvalidOrder { n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("feature {0} is not part of the subproblem")]
    FeatureNotInSubproblem(String),

    #[error("averaging edge ({s},{t}) not registered for feature {feature}")]
    UnknownAveragingEdge { feature: String, s: usize, t: usize },

    #[error("size guard exceeded: {states} labelings, limit {limit}")]
    SizeGuard { states: u128, limit: u128 },

    #[error("model graph is not a grid")]
    NotAGrid,

    #[error("decomposition does not cover feature {0}")]
    UncoveredFeature(String),

    #[error("chain is not a path in the model graph: {0}")]
    NotAPath(String),

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("number error: {0}")]
    Number(#[from] NumberError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A parse failure with its position in the input.
#[derive(Debug, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Failure to interpret a textual or JSON number.
#[derive(Debug, Error)]
pub enum NumberError {
    #[error("cannot parse number from {0:?}")]
    Syntax(String),
    #[error("number is not finite: {0:?}")]
    NotFinite(String),
    #[error("division by zero in {0:?}")]
    ZeroDenominator(String),
    #[error("operation not supported in exact mode: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
