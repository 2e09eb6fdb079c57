use thiserror::Error;

use crate::quadrature::QuadratureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("recovered tail is negative or increasing near u = {u}: {detail}")]
    NegativeTail { u: f64, detail: String },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("root finding failed: {0}")]
    RootFind(String),
    #[error("expected {expected:.1} jumps per replica exceeds the sampler budget of {budget}")]
    SamplerOverflow { expected: f64, budget: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl LevyError {
    /// True for failures of numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LevyError::Quadrature(_)
                | LevyError::RootFind(_)
                | LevyError::Inconclusive(_)
                | LevyError::SamplerOverflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, LevyError>;
