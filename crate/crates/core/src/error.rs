use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification used by the command line front end to pick an exit
/// status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Precondition,
    Numerical,
}

impl ErrorKind {
    /// Process exit status: 2 parse, 3 precondition, 4 numerical.
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Parse => 2,
            ErrorKind::Precondition => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("value {value} is not on the grid (nearest point {nearest})")]
    OffGrid { value: f64, nearest: f64 },

    #[error("value {value} lies outside the grid span [{lo}, {hi}]")]
    OutOfSpan { value: f64, lo: f64, hi: f64 },

    #[error("grids do not match")]
    GridMismatch,

    #[error("convolution needs a grid anchored at zero, got origin {0}")]
    UnanchoredGrid(f64),

    #[error("invalid mass vector: {0}")]
    InvalidMass(String),

    #[error("wrap-around: result support reaches index {needed} but the grid ends at {last}")]
    WrapAround { needed: usize, last: usize },

    #[error("inverse transform residue {residue:e} at index {index} exceeds tolerance ({what})")]
    Residue {
        index: usize,
        residue: f64,
        what: &'static str,
    },

    #[error("spectral denominator magnitude {magnitude:e} at frequency {index} is below 1e-12")]
    SmallDenominator { index: usize, magnitude: f64 },

    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("distribution total {total} never reaches probability {p}")]
    InsufficientMass { p: f64, total: f64 },

    #[error("lower CDF exceeds upper CDF by {excess:e} at index {index}")]
    OrderingViolation { index: usize, excess: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bracket [{lo}, {hi}] does not straddle p = {p} (cdf {cdf_lo} .. {cdf_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        p: f64,
        cdf_lo: f64,
        cdf_hi: f64,
    },

    #[error("bisection did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("only {mass} probability falls inside the horizon (need at least {need})")]
    Truncation { mass: f64, need: f64 },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse(_) | Error::Io(_) => ErrorKind::Parse,
            Error::Residue { .. }
            | Error::SmallDenominator { .. }
            | Error::OrderingViolation { .. }
            | Error::NoConvergence(_)
            | Error::Truncation { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Precondition,
        }
    }
}
