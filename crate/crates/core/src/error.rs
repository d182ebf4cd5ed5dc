use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    /// The renormalized washboard has no local minimum (bias >= 1 - eps).
    #[error("no barrier: bias {bias} is not below the critical tilt {critical}")]
    NoBarrier { bias: f64, critical: f64 },

    #[error("zero-point renormalization eps = {0} is outside [0, 1)")]
    EpsilonOutOfRange(f64),

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("no outer turning point found: {0}")]
    NoTurningPoint(String),

    #[error("not converged: {0}")]
    Convergence(String),

    #[error("invalid sweep axis: {0}")]
    InvalidAxis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
