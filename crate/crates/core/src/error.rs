use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rope length must be positive, got {0}")]
    NonPositiveRope(f64),

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid stack profile: {0}")]
    InvalidProfile(String),

    #[error("infeasible corridor at grid point {index}: lower {lower} > upper {upper}")]
    InfeasibleCorridor { index: usize, lower: f64, upper: f64 },

    #[error("grid too coarse: {0} intervals, need at least 2")]
    GridTooCoarse(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("time is not increasing at grid index {0}")]
    NonMonotoneTime(usize),

    #[error("simulation diverged at t = {0}")]
    BlowUp(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, lo, hi })
    }
}
