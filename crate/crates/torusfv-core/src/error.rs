//! Error type shared across the crate.

use core::fmt;

/// Everything that can go wrong while building grids, assembling states or
/// advancing the scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Spatial dimension outside `{2, 3}`.
    InvalidDimension(usize),
    /// Fewer than two cells per axis degenerates the periodic topology.
    TooFewCells(usize),
    /// A parameter failed its admissibility bound; carries the parameter name.
    InvalidParameter { name: &'static str, value: f64 },
    /// Two fields or states do not live on the same grid.
    GridMismatch,
    /// Initial data produced a nonpositive cell mean.
    NonPositiveInitialData { field: &'static str, min: f64 },
    /// `t_end` is not an integer multiple of the time step.
    NonIntegerStepCount { t_end: f64, dt: f64 },
    /// Picard iteration exhausted its budget; `dt` is likely too large.
    NoConvergence {
        step: usize,
        iterations: usize,
        increment: f64,
    },
    /// A converged state lost positivity of density or temperature.
    PositivityLoss {
        step: usize,
        min_rho: f64,
        min_theta: f64,
    },
    /// Nonfinite values appeared during the solve (blow-up).
    NonFinite { step: usize },
    /// Grid refinement ratio is not an integer multiple.
    NonIntegerRefinement { fine: usize, coarse: usize },
    /// A convergence-study configuration is inconsistent.
    InvalidStudy(&'static str),
    /// A space-time test function violated a requirement (e.g. sign).
    InvalidTestFunction(&'static str),
    /// Histories passed to a comparison do not share time stamps.
    StampMismatch,
    /// A study level failed; carries the resolution and the inner error.
    LevelFailed {
        n: usize,
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    /// Attach the time-step index to solver errors raised inside the loop.
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            Error::NoConvergence {
                iterations,
                increment,
                ..
            } => Error::NoConvergence {
                step,
                iterations,
                increment,
            },
            Error::PositivityLoss {
                min_rho, min_theta, ..
            } => Error::PositivityLoss {
                step,
                min_rho,
                min_theta,
            },
            Error::NonFinite { .. } => Error::NonFinite { step },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension(d) => write!(f, "dimension must be 2 or 3, got {d}"),
            Error::TooFewCells(n) => write!(f, "need at least 2 cells per axis, got {n}"),
            Error::InvalidParameter { name, value } => {
                write!(f, "parameter {name} out of range: {value}")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::NonPositiveInitialData { field, min } => {
                write!(f, "initial {field} has nonpositive cell mean {min}")
            }
            Error::NonIntegerStepCount { t_end, dt } => {
                write!(f, "t_end = {t_end} is not an integer multiple of dt = {dt}")
            }
            Error::NoConvergence {
                step,
                iterations,
                increment,
            } => write!(
                f,
                "step {step}: Picard iteration did not converge after {iterations} sweeps \
                 (increment {increment:.3e}); consider a smaller dt"
            ),
            Error::PositivityLoss {
                step,
                min_rho,
                min_theta,
            } => write!(
                f,
                "step {step}: converged state lost positivity (min rho {min_rho:.3e}, \
                 min theta {min_theta:.3e})"
            ),
            Error::NonFinite { step } => write!(f, "step {step}: nonfinite values (blow-up)"),
            Error::NonIntegerRefinement { fine, coarse } => {
                write!(f, "N = {fine} is not an integer multiple of N = {coarse}")
            }
            Error::InvalidStudy(msg) => write!(f, "invalid study configuration: {msg}"),
            Error::InvalidTestFunction(msg) => write!(f, "invalid test function: {msg}"),
            Error::StampMismatch => write!(f, "histories do not share time stamps"),
            Error::LevelFailed { n, source } => write!(f, "study level N = {n}: {source}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
