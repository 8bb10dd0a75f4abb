use thiserror::Error;

/// Errors raised by the solvers, the simulator and parameter validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("prior {x} is below the stopping threshold {x_stop}")]
    BelowThreshold { x: f64, x_stop: f64 },

    #[error("the reachable prior set is dense (no lattice); use the series solver")]
    NoLattice,

    #[error("seeding band epsilon={epsilon} leaves no seedable lattice index")]
    EmptySeedBand { epsilon: f64 },

    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("backward recursion diverged at lattice index {index}")]
    Diverged { index: i64 },

    #[error("value iteration did not converge within {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("degenerate belief: {0}")]
    DegenerateBelief(String),

    #[error("requires the symmetric case q = 1 - p")]
    NotSymmetric,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
