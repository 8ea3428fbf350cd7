use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters: out-of-range values, empty grids, too few replicates.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A documented precondition of an estimator does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Covariance factorization or sampling broke down numerically.
    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("weight function is not finite: f({value}) = {result}")]
    NonFiniteWeight { value: f64, result: f64 },
}

impl Error {
    /// `true` for failures caused by arithmetic rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Simulation(_) | Error::NonFiniteWeight { .. })
    }
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
