use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("monotonicity lost at x = {x} (derivative {derivative:e}) in iteration {iteration}")]
    MonotonicityLoss {
        iteration: usize,
        x: f64,
        derivative: f64,
    },

    #[error("linear system is singular or badly conditioned (estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("particles {left} and {right} collided at t = {t} (gap {gap:e})")]
    Collision {
        left: usize,
        right: usize,
        t: f64,
        gap: f64,
    },

    #[error("{0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
