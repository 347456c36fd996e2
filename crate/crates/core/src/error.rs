use thiserror::Error;

use crate::evolution::Trajectory;

/// Errors produced by the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model parameters fail one of the standing assumptions.
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// A root finder or integrator did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A property guaranteed for valid inputs was observed to fail, which
    /// points at a rate function that does not satisfy its assumptions.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// The radius integrator hit its step budget. The trajectory computed so
    /// far is attached.
    #[error("step limit of {max_steps} reached at t = {t}")]
    StepLimit {
        max_steps: usize,
        t: f64,
        partial: Box<Trajectory>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
