use thiserror::Error;

/// Errors raised by model construction and the numerical solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CjtError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("unstable bath: {what} {index} has energy {energy:.6e} <= 0")]
    UnstableBath {
        what: &'static str,
        index: usize,
        energy: f64,
    },

    #[error("inconsistent drive frequencies: {0}")]
    InconsistentDrive(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("spin frequency diverges at site {site}: cos(theta) = {cos_theta:.3e}; expansion point too close to theta = pi/2")]
    SingularSpinFrequency { site: usize, cos_theta: f64 },

    #[error("unstable expansion point: {0}")]
    UnstableExpansion(String),

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: u128, cap: usize },
}

impl CjtError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        CjtError::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CjtError>;
