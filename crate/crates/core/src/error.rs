use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-regular configuration: {0}")]
    NonRegular(String),
    #[error("orbit constraint violated: residual {0:e}")]
    ConstraintViolated(f64),
    #[error("singular matrix")]
    Singular,
    #[error("infeasible orbit specification: {0}")]
    Infeasible(String),
    #[error("inadmissible spectrum: {0}")]
    Spectrum(String),
    #[error("regularity lost at t = {time}: minimal gap {min_gap:e}")]
    RegularityLoss { time: f64, min_gap: f64 },
    #[error("integration step failed at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },
    #[error("numerical rank is ambiguous: {0}")]
    RankAmbiguous(String),
    #[error("gradient evaluation failed: {0}")]
    Gradient(String),
    #[error("malformed trace word: {0}")]
    MalformedWord(String),
    #[error("angle variable vanishes at the current weight choice")]
    VanishingAngle,
}

pub type Result<T> = std::result::Result<T, Error>;
