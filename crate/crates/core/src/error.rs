use num_complex::Complex64;
use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of {function} at {at}")]
    Pole { function: &'static str, at: Complex64 },

    #[error("Barnes G vanishes at {at}")]
    ZeroOfG { at: Complex64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("coincident rapidities at positions {i} and {j}")]
    CoincidentRapidities { i: usize, j: usize },

    #[error("{n} particles exceed the cap of {cap}")]
    TooManyParticles { n: usize, cap: usize },

    #[error("separation {x0}, {x1} is not spacelike")]
    Timelike { x0: f64, x1: f64 },

    #[error("fit did not converge: {0}")]
    NonConvergentFit(String),

    #[error("epsilon extrapolation did not converge: {0}")]
    NonConvergentExtrapolation(String),

    #[error("quadrature budget of {budget} evaluations exceeded")]
    Budget { budget: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("truncation set has more than {limit} elements")]
    EnumerationOverflow { limit: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
