use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("modulus is not smoothed; run smooth_modulus first")]
    NotSmoothed,
    #[error("component {component} collapsed after {attempts} attempts")]
    ComponentCollapse { component: usize, attempts: usize },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("{0} components fail the high-mode bound (at most two allowed)")]
    TooManyLowModes(usize),
    #[error("zero trace")]
    ZeroTrace,
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
