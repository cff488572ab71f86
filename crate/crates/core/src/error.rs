use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model specification: {0}")]
    InvalidModel(String),

    #[error("unknown problem `{name}`; valid names are: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error("problem `{0}` has no exact or reference solution")]
    MissingReference(String),

    #[error("derivative order {0} requested, jets carry at most order 2")]
    DerivativeOrder(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
