use thiserror::Error;

use crate::director::DirectorField;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("surface is not star-shaped about the origin: {0}")]
    NotStarShaped(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("{context} did not converge within {iterations} iterations")]
    ConvergenceFailure {
        context: String,
        iterations: usize,
        /// Director iterate at the point the budget ran out, when one exists.
        last_iterate: Option<Box<DirectorField>>,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("function is not convex on [-1, 1]: {0}")]
    NotConvex(String),

    #[error("time step rejected: {0}")]
    InvalidTimestep(String),

    #[error("mean convexity lost: min H = {min_h:.3e} below floor {floor:.3e}")]
    MeanConvexityLost { min_h: f64, floor: f64 },

    #[error("no admissible path at M = {m_max}")]
    Infeasible { m_max: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
