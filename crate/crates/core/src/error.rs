use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("zero target not reachable within horizon cap {cap}")]
    InfeasibleWithinHorizon { cap: f64 },

    #[error("sphere minimization did not converge after {restarts} restarts (best gradient norm {gradient_norm:e})")]
    NonConvergent { restarts: usize, gradient_norm: f64 },

    #[error("root bracketing failed: {0}")]
    RootFinding(String),

    #[error("extracted control misses the target: terminal error {terminal_error:e}")]
    ExtractionFailed { terminal_error: f64 },

    #[error("no admissible grid point: {0}")]
    EmptyAdmissibleGrid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
