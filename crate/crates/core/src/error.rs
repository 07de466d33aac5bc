use thiserror::Error;

pub type Result<T> = std::result::Result<T, CdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("gapless spectrum: gap {gap:.3e} at lambda = {lambda}")]
    Gapless { lambda: f64, gap: f64 },

    #[error("eigenstate tracking failed on [{lo}, {hi}]: {reason}")]
    Tracking { lo: f64, hi: f64, reason: String },

    #[error("no convergence after {steps} steps (last delta {last_delta:.3e})")]
    Convergence { steps: usize, last_delta: f64 },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("resource limit: {0}")]
    Resource(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(CdError::Domain(msg.into()))
}
