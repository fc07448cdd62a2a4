use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("series has zero variance; cannot normalize")]
    ZeroVariance,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient data: need at least {required} points, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("{what}: expected length {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("training diverged at epoch {epoch} (last finite loss: {last_finite_loss:?})")]
    Diverged {
        epoch: usize,
        last_finite_loss: Option<f64>,
    },

    #[error("optimizer did not converge after {iterations} iterations (objective {objective})")]
    NonConvergence { iterations: usize, objective: f64 },

    #[error("fitted AR polynomial is not stationary (smallest root modulus {min_root_modulus})")]
    NonStationary { min_root_modulus: f64 },

    #[error("no true events to compare against")]
    NoTrueEvents,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
