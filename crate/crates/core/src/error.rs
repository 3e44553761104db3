use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("width {width} exceeds the supported maximum of {max} bits")]
    WidthOverflow { width: usize, max: usize },

    /// Exact enumeration would need more than 2^27 cells.
    #[error("exact enumeration over {bits} bits exceeds the 2^{max} cell budget; use Monte Carlo")]
    DimensionOverflow { bits: usize, max: usize },

    #[error("stationary distribution did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Reducible or periodic chain: no unique limiting distribution.
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    #[error("stationary distribution is inconsistent with the model: {0}")]
    InconsistentStationary(String),

    #[error("sequence too short: need at least {needed} bits, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
