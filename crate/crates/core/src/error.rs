use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A configuration file or value could not be used.
    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite amplitude after propagation step {step}")]
    NonFinite { step: usize },

    /// Density reached the periodic boundary region.
    #[error("support guard tripped at step {step} (t = {time}): boundary/peak density ratio {ratio:e}")]
    SupportGuard { step: usize, time: f64, ratio: f64 },

    /// Wave packets (or branches) did not become disjoint in the simulated window.
    #[error("branches failed to separate: {0}")]
    Separation(String),
}

impl Error {
    /// Failures that originate in the numerics rather than in the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::SupportGuard { .. } | Error::Separation(_))
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
