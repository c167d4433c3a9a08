use crate::integrators::StepStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("cap mismatch: {left} vs {right}")]
    CapMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String, stats: StepStats },

    #[error("characteristic blow-up at t = {t} (|coefficient| > {guard})")]
    CharacteristicBlowUp { t: f64, guard: f64 },

    #[error("singular matrix (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("singular stage matrix at level {level}")]
    SingularStage { level: usize },

    #[error("seed failure: {0}")]
    SeedFailure(String),

    #[error("no convergence after {iterations} iterations (last change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }
}
