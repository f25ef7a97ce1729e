use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters (alpha={alpha}, theta={theta}): require α∈[0,1), θ>−α")]
    InvalidParams { alpha: f64, theta: f64 },
    #[error("operation requires alpha > 0 (got alpha={0})")]
    AlphaZero(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("outside oracle scope: {0}")]
    OracleScope(String),
    #[error("accumulator updated out of order: expected n={expected}, got n={got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("trajectory {index} (seed {seed}) failed: {reason}")]
    Trajectory { seed: u64, index: u64, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
