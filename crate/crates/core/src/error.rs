use thiserror::Error;

/// Errors raised by the field, Littlewood-Paley, dynamics and integration layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("zero-mode not invertible (mean {mean:e})")]
    ZeroModeNotInvertible { mean: f64 },
    #[error("negative propagation time {0}")]
    NegativeTime(f64),
    #[error("negative diffusivity {0}")]
    NegativeDiffusivity(f64),
    #[error("Lebesgue exponent must be >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("dilation factor {lambda} invalid for grid size {n}")]
    InvalidDilation { lambda: usize, n: usize },
    #[error("dilation exceeds grid: field support reaches index {support}, limit {limit}")]
    DilationExceedsGrid { support: f64, limit: f64 },
    #[error("grid too small: only {shells} dyadic shells resolvable, need at least 3")]
    TooFewShells { shells: i32 },
    #[error("shell index {j} outside resolved range [{j_min}, {j_max}]")]
    ShellOutOfRange { j: i32, j_min: i32, j_max: i32 },
    #[error("Bernstein ratio requires q >= p (p={p}, q={q})")]
    ExponentOrder { p: f64, q: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
