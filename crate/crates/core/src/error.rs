use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A point or parameter lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A user supplied nonlinearity returned a non-positive or non-finite value.
    #[error("nonlinearity contract violated: f({alpha}, {beta}) = {value}")]
    Contract { alpha: f64, beta: f64, value: f64 },

    #[error("kernel overflow at output node {node} (radius {radius})")]
    Range { node: usize, radius: f64 },

    /// The source term decays too slowly for the integral over R^n to converge.
    #[error("non-integrable tail: fitted decay exponent {exponent} must exceed {required}")]
    NonIntegrable { exponent: f64, required: f64 },

    #[error("Picard iteration diverged after {iterations} iterations: {reason}")]
    Divergence {
        iterations: usize,
        reason: String,
        residual_history: Vec<f64>,
    },

    #[error("Picard iteration did not reach tolerance within {iterations} iterations (last residual {residual})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("degree {degree} exceeds the multiplier table (max degree {max_degree})")]
    Truncation { degree: usize, max_degree: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for the solver failures that the CLI reports as divergence.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NotConverged { .. })
    }
}
