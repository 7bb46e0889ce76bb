use thiserror::Error;

/// Errors produced by the analytic and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its domain (negative rate, load out of range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested system is unstable and has no stationary regime.
    #[error("unstable system: {0}")]
    Unstable(String),

    /// A truncated computation cannot certify the requested tail mass.
    #[error("truncation insufficient: {0}")]
    Truncation(String),

    /// The assignment-rate equations produced an invalid solution.
    #[error("assignment rates infeasible: {0}")]
    Infeasible(String),

    /// A state-space construction exceeded its size cap.
    #[error("state space too large: {got} states exceeds cap {cap}")]
    StateSpace { got: usize, cap: usize },

    /// No Pareto-optimal configuration exists for the requested setup.
    #[error("empty Pareto frontier: {0}")]
    NoFrontier(String),

    /// The requested combination of policy and metric is not computable.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
