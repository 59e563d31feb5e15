use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix shape {rows}x{cols} with {len} entries")]
    InvalidShape { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("zero matrix: {0} is undefined")]
    ZeroMatrix(&'static str),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },

    #[error("matrix too large for the dense SVD oracle: min dimension {dim} exceeds {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("cosh overflow: entry magnitude {0} exceeds the 700 limit (input not normalized?)")]
    CoshOverflow(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("forward cache does not belong to this model state")]
    StaleCache,

    #[error("training diverged at step {step}: loss {loss} (last finite step: {})", fmt_step(.last_finite_step))]
    Diverged {
        step: usize,
        loss: f64,
        last_finite_step: Option<usize>,
    },
}

fn fmt_step(step: &Option<usize>) -> String {
    step.map_or_else(|| "none".to_string(), |s| s.to_string())
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
