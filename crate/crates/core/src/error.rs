use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("integral diverges: {0}")]
    InfiniteIntegral(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {value}, error {error})")]
    NonConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("conditioning on a set of zero probability: {0}")]
    EmptyConditioning(String),

    #[error("degenerate cell {index}: zero probability")]
    DegenerateCell { index: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
