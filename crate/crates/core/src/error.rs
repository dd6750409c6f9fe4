use num_complex::Complex64;
use thiserror::Error;

use crate::frontend::parse::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point has dimension {got}, polynomial expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("unsupported pairing: {0}")]
    UnsupportedPairing(String),

    #[error("integrand is not finite ({value}) at node {point:?}")]
    NonFiniteSample { point: Vec<Complex64>, value: Complex64 },

    #[error("quadrature rule failed validation: {0}")]
    QuadratureValidation(String),

    #[error("invalid quadrature size: {0}")]
    InvalidRuleSize(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: ParseError,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
