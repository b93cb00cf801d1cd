use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parity violation: total {color} degree {total} is odd")]
    Parity { color: &'static str, total: u64 },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("path has a negative jump of {size} at t = {time}")]
    NegativeJump { time: f64, size: f64 },
    #[error("path is not non-decreasing near t = {0}")]
    NotNonDecreasing(f64),
    #[error("time {time} is not a running-minimum time of the path")]
    NotRunningMinimum { time: f64 },
    #[error("time {requested} lies beyond the path horizon {horizon}")]
    BeyondHorizon { requested: f64, horizon: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("index sets differ: {0} vs {1}")]
    IndexMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
