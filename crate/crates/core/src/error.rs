use thiserror::Error;

/// Errors raised by the model, optimizer, simulator and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The resource budget cannot be met by any operating point.
    #[error("infeasible budget: epsilon_r = {epsilon_r} does not exceed the PRACH cost {prach}")]
    Infeasible { epsilon_r: f64, prach: f64 },

    /// The drift recursion did not reach the stopping threshold.
    #[error("drift recursion diverged: backlog {backlog} after {rounds} rounds")]
    Diverged { rounds: usize, backlog: f64 },

    /// A simulation hit its round cap before every UE connected.
    #[error("simulation did not terminate within {rounds} rounds ({connected}/{total} connected)")]
    NonTermination {
        rounds: usize,
        connected: usize,
        total: usize,
        trace: Box<Vec<crate::sim::TraceRow>>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
