use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on an input value was violated.
    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    /// Two branches of a superposition enumerate a different number of leaves.
    #[error("leaf count mismatch: first branch has {left} leaves, second has {right}")]
    LeafCountMismatch { left: usize, right: usize },

    /// The first-order density matrix was requested outside its validity window.
    #[error("linear decoherence form used outside its validity window (tau = {tau}, limit {limit})")]
    OutOfValidity { tau: f64, limit: f64 },

    /// The integrator produced a non-finite or vanishing state.
    #[error("numeric failure at step {step}{}", .trajectory.map(|t| format!(" of trajectory {t}")).unwrap_or_default())]
    NumericFailure {
        step: usize,
        trajectory: Option<usize>,
    },

    /// One or more trajectories of an ensemble failed.
    #[error("{} trajectories failed (first: {first})", .failed.len())]
    EnsembleFailure {
        failed: Vec<usize>,
        first: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the integrator rather than by the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NumericFailure { .. } | Error::EnsembleFailure { .. }
        )
    }
}
