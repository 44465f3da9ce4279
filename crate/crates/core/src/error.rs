use thiserror::Error;

/// Errors raised by the audit toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    /// A caller-supplied parameter violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The released vector of a mechanism audit is exactly zero, so cosines
    /// are undefined.
    #[error("degenerate release: the noised sum has zero norm")]
    DegenerateRelease,

    /// Input data carries no information for the requested statistic.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative search did not reach its target within its budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The simulated model became non-finite.
    #[error("training aborted at round {round}: model parameters are not finite")]
    AbortedRun { round: usize },
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> AuditError {
    AuditError::InvalidArgument(msg.into())
}
