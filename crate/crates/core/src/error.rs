use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid edge ({u}, {v}): {reason}")]
    InvalidEdge { u: usize, v: usize, reason: String },

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration too large: n*depth = {n}*{depth} = {} exceeds the bound {limit}", n * depth)]
    EnumerationTooLarge { n: usize, depth: usize, limit: usize },

    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },

    #[error("integration drifted outside [0, 1] at t = {t}: agent {agent} has value {value}")]
    IntegrationDrift { t: f64, agent: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by bad user input rather than by a failure
    /// while running. The CLI maps these to its usage exit code.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::IntegrationDiverged { .. }
                | Error::IntegrationDrift { .. }
                | Error::FitFailed(_)
                | Error::Io(_)
        )
    }
}
