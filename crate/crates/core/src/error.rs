use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid expression at `{path}`: {rule}")]
    Validation { path: String, rule: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("equality constraint eq[{index}] is not affine")]
    EqualityNotAffine { index: usize },

    #[error("problem has no constraints; the penalty function is undefined")]
    Unconstrained,

    #[error("initial multiplier must be nonnegative, got {0}")]
    NegativeMultiplier(f64),

    #[error("no iterations accumulated yet")]
    EmptyAverage,

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem {
        name: String,
        available: Vec<String>,
    },

    #[error("expression at `{0}` wraps a callable oracle and cannot be serialized")]
    NotSerializable(String),

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
