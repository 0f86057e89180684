use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix data has length {len}, expected {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix is not positive definite: Cholesky pivot {index} is {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:e}")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("{what} contains non-finite values")]
    NonFinite { what: String },
    #[error("backward requires a scalar (1x1) loss, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("unknown tape variable {0}")]
    UnknownVar(usize),
    #[error("degenerate subspace: trace {trace:e} is below {threshold:e}")]
    DegenerateSubspace { trace: f64, threshold: f64 },
    #[error("operator is not idempotent (residual {residual:e}); build it with hard_projector")]
    NotIdempotent { residual: f64 },
    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown concept '{name}'{}", suggestion_suffix(.suggestions))]
    UnknownConcept {
        name: String,
        suggestions: Vec<String>,
    },
    #[error("duplicate concept name '{0}'")]
    DuplicateConcept(String),
    #[error("concept store is empty")]
    EmptyStore,
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("insufficient candidates: requested {requested}, only {available} available")]
    InsufficientCandidates { requested: usize, available: usize },
    #[error("could not find {requested} negative corruptions after {attempts} draws")]
    NegativeSamplingExhausted { requested: usize, attempts: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient for node '{0}'")]
    NonFiniteGradient(String),
    #[error("invalid Beta head: {0}")]
    InvalidBetaHead(String),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("query {0} has no relevant items")]
    NoRelevant(usize),
    #[error("validation scores contain a single class")]
    SingleClass,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        alloc::format!("; did you mean: {}?", suggestions.join(", "))
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
