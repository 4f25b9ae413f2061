use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum FieldlabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A standing assumption on `f` or `M` is violated by the input.
    #[error("condition ({condition}) violated: {message}")]
    ConditionViolated {
        condition: &'static str,
        message: String,
    },

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("bisection did not converge after {iterations} iterations; bracket narrowed to [{lo}, {hi}]")]
    BisectionExhausted { iterations: usize, lo: f64, hi: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FieldlabError>;
