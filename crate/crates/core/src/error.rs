use thiserror::Error;

/// Errors raised by geometry evaluation, classification, surgery and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the manifold domain: {0}")]
    Domain(String),

    #[error("metric is singular or not positive definite: {0}")]
    SingularMetric(String),

    #[error("geodesic reached a collapse end at t = {t}")]
    CollapseReached { t: f64 },

    #[error("geodesic energy drift {drift:.3e} exceeds tolerance {tol:.3e}; reduce the step")]
    StepTooLarge { drift: f64, tol: f64 },

    #[error("level is singular at this point (|grad f| = {grad_norm:.3e})")]
    SingularLevel { grad_norm: f64 },

    #[error("identification is ambiguous: both mirror and period patterns match")]
    AmbiguousMatch,

    #[error("no identification found before the horizon t_max = {t_max}")]
    HorizonExceeded { t_max: f64 },

    #[error("descriptor is inconsistent or unsupported: {0}")]
    UnsupportedDescriptor(String),

    #[error("transnormal system violates the classification table: {0}")]
    InconsistentSystem(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("bin {bin} has only {count} samples (need at least {min})")]
    InsufficientSamples { bin: usize, count: usize, min: usize },

    #[error("unsupported deck group: {0}")]
    UnsupportedGroup(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
