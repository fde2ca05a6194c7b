use thiserror::Error;

/// Errors raised by the evidence computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The linear odds value does not fit in an `f64`; the log form is still valid.
    #[error("linear odds overflow at argument {0}; use the log form")]
    Overflow(f64),

    /// A user-supplied kernel or prior produced an invalid value.
    #[error("invalid model: {0}")]
    ModelValidity(String),

    /// A one-sided prior mass is too small for the odds to be defined.
    #[error("undefined odds: {0}")]
    UndefinedOdds(String),

    /// An internal numerical routine failed to converge or verify.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A structural assumption about a likelihood or predicate did not hold.
    #[error("structure violation: {0}")]
    Structure(String),
}

impl EvidenceError {
    /// True for errors caused by invalid user input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            EvidenceError::Domain(_) | EvidenceError::ModelValidity(_) | EvidenceError::UndefinedOdds(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, EvidenceError>;

pub(crate) fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(EvidenceError::Domain(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(EvidenceError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn require_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(EvidenceError::Domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}
