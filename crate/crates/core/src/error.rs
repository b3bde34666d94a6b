use thiserror::Error;

/// Errors raised by the shock-structure library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ShockError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("species are degenerate: charge-to-mass ratios coincide ({0})")]
    DegenerateSpecies(f64),

    #[error("upstream state is not a rest point: {0}")]
    NotRestPoint(String),

    #[error("no rest points recovered ({failed_seeds} seeds failed)")]
    NoRestPoints { failed_seeds: usize },

    #[error("singular dissipation matrix: {0}")]
    SingularMassMatrix(String),

    #[error("singular viscosity matrix (condition number {condition:.3e})")]
    SingularViscosity { condition: f64 },

    #[error("rest point has no unstable direction")]
    NoUnstableDirection,

    #[error("integration failed: {0}")]
    Integration(#[from] IntegrationError),

    #[error("no connection found: best mismatch {best_mismatch:.3e} after {starts} starts")]
    NoConnection { best_mismatch: f64, starts: usize },

    #[error("relaxation did not converge: {0}")]
    NonConvergence(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("continuation lost the profile at multiplier {multiplier}")]
    ContinuationBreak { multiplier: f64 },
}

/// Failure modes of a single integration, each carrying the last valid sample.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegrationError {
    #[error("state left the admissible cone at x = {x}")]
    LeftAdmissible { x: f64, last: Vec<f64> },

    #[error("integration span {span} exceeded without reaching the event")]
    SpanExceeded { span: f64, last: Vec<f64> },

    #[error("stiffness failure at x = {x} (step size {step:.3e})")]
    Stiffness { x: f64, step: f64, last: Vec<f64> },

    #[error("step budget of {max_steps} exhausted at x = {x}")]
    MaxSteps { max_steps: usize, x: f64, last: Vec<f64> },
}

impl IntegrationError {
    pub fn last_state(&self) -> &[f64] {
        match self {
            IntegrationError::LeftAdmissible { last, .. }
            | IntegrationError::SpanExceeded { last, .. }
            | IntegrationError::Stiffness { last, .. }
            | IntegrationError::MaxSteps { last, .. } => last,
        }
    }
}

pub type Result<T> = std::result::Result<T, ShockError>;

pub(crate) fn domain(msg: impl Into<String>) -> ShockError {
    ShockError::Domain(msg.into())
}
