use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("invalid level: must be in (0, 1), got {level}")]
    InvalidLevel { level: f64 },

    #[error("invalid weights: {reason}")]
    InvalidWeights { reason: String },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("negative liability {value} at scenario {index}")]
    NegativeLiability { index: usize, value: f64 },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("invalid recovery function: {0}")]
    InvalidRecoveryFunction(String),

    #[error("level function is not non-decreasing near lambda = {lambda}")]
    NonMonotoneLevel { lambda: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("denominator must be positive, got {value}")]
    DenominatorNotPositive { value: f64 },

    #[error("conditional recovery probability undefined: default probability is zero")]
    ZeroDefaultProbability,

    #[error("ambiguous binding index: relative gap {gap:.3e} below threshold {threshold:.3e}")]
    AmbiguousBindingIndex { gap: f64, threshold: f64 },

    #[error("construction infeasible: {0}")]
    ConstructionInfeasible(String),

    #[error("target return {target} outside attainable range [{min}, {max}]")]
    TargetReturnInfeasible { target: f64, min: f64, max: f64 },

    #[error("simplex stalled in phase {phase} after {iterations} iterations")]
    SolverStalled { phase: u8, iterations: usize },

    #[error("invalid test measure: {0}")]
    InvalidTestMeasure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::AmbiguousBindingIndex { .. }
                | Error::SolverStalled { .. }
                | Error::DenominatorNotPositive { .. }
                | Error::ConstructionInfeasible(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLevel { level })
    }
}

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

pub(crate) fn check_positive(value: f64, name: &'static str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be positive and finite, got {value}") })
    }
}
