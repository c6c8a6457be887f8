use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Two charges (or a charge and a fixed hole) closer than the coincidence threshold.
    #[error("infinite energy: {0}")]
    InfiniteEnergy(String),

    #[error("point {index} at ({x}, {y}) is closer than {margin} to the grid boundary")]
    BoundaryClipping {
        index: usize,
        x: f64,
        y: f64,
        margin: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("not enough samples: have {have}, need {need}")]
    TooFewSamples { have: usize, need: usize },

    #[error("potential is not confining on the grid: {0}")]
    NonConfining(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
