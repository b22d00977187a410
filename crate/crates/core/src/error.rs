use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix must have at least one row and one column")]
    Empty,

    #[error("vector {index} is not stochastic: {reason}")]
    NotStochastic { index: usize, reason: String },

    #[error("column {column} has zero variance")]
    ConstantColumn { column: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-negative least squares did not terminate within {iterations} iterations")]
    MaxIterationsExceeded { iterations: usize },

    #[error("correlation {rho} does not give a positive definite covariance")]
    InvalidRho { rho: f64 },

    #[error("no cell of the RSS surface flattens below the threshold; extend the ranges")]
    NoElbow,
}

impl Error {
    pub(crate) fn mismatch(
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    ) -> Self {
        use alloc::format;
        Error::DimensionMismatch {
            context,
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        }
    }
}
