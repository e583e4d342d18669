use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid channel pair (x={x}, y={y}): need finite 0 < x < y")]
    InvalidChannel { x: f64, y: f64 },

    #[error("power fraction a2={0} outside [0, 1]")]
    InvalidPowerSplit(f64),

    /// NOMA requires a1 >= a2, i.e. a2 <= 1/2.
    #[error("infeasible NOMA split a2={0}: NOMA requires a2 <= 1/2")]
    InfeasibleNomaSplit(f64),

    #[error("time fraction b2={0} outside [0, 1]")]
    InvalidTimeSplit(f64),

    #[error("degenerate split ({0}): classification is ill-posed at a segment endpoint")]
    DegenerateSplit(String),

    #[error("rate {z} outside boundary domain [0, {max}]")]
    Domain { z: f64, max: f64 },

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported population size M={users} (closed forms support M <= {max})")]
    UnsupportedSize { users: usize, max: usize },

    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
}
