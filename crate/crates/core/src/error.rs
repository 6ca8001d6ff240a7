use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine simulator.
#[derive(Debug, Error)]
pub enum OttoError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("time {t} s outside the stroke interval [0, {tau}] s")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("degenerate Hamiltonian: field magnitude {magnitude:e} below threshold")]
    DegenerateHamiltonian { magnitude: f64 },

    #[error("degenerate reservoir temperature: {0}")]
    DegenerateTemperature(&'static str),

    #[error("efficiency undefined: {0}")]
    EfficiencyUndefined(&'static str),

    #[error("operator invariant violated: {0}")]
    Invariant(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("{0} requires g = 1, got g = {1}")]
    Misuse(&'static str, f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl OttoError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        OttoError::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            OttoError::Integration(_)
                | OttoError::Invariant(_)
                | OttoError::DegenerateHamiltonian { .. }
                | OttoError::EfficiencyUndefined(_)
        )
    }

    /// Short machine-readable category, used in sweep error columns.
    pub fn tag(&self) -> &'static str {
        match self {
            OttoError::InvalidParam { .. } => "invalid_param",
            OttoError::TimeOutOfRange { .. } => "time_out_of_range",
            OttoError::DegenerateHamiltonian { .. } => "degenerate_hamiltonian",
            OttoError::DegenerateTemperature(_) => "degenerate_temperature",
            OttoError::EfficiencyUndefined(_) => "efficiency_undefined",
            OttoError::Invariant(_) => "invariant",
            OttoError::Integration(_) => "integration",
            OttoError::Misuse(..) => "misuse",
            OttoError::Config(_) => "config",
            OttoError::Io { .. } => "io",
            OttoError::Format { .. } => "format",
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, OttoError::Io { .. } | OttoError::Format { .. })
    }
}

pub type Result<T, E = OttoError> = std::result::Result<T, E>;
