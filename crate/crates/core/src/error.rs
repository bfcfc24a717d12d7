use thiserror::Error;

/// Errors raised by solvers, trackers, the simulator and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no convergence at t={t}: residual {residual:e} after {iterations} iterations")]
    NonConvergence { t: usize, iterations: usize, residual: f64 },

    #[error("domain violation at t={t}: {detail}")]
    DomainViolation { t: usize, detail: String },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("edge {src}->{dst} is {delay} ticks stale at t={t}, beyond declared cap {cap}")]
    StaleBeyondCap {
        t: usize,
        src: usize,
        dst: usize,
        delay: usize,
        cap: usize,
    },

    #[error("contraction not certified: Lipschitz bound {estimate} >= 1")]
    ContractionUncertified { estimate: f64 },

    #[error("unsupported area partition: {0}")]
    PartitionUnsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
