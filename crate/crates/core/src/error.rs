use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a documented bound. `param` names the offending field.
    #[error("{param}: {reason}")]
    Domain { param: &'static str, reason: String },

    /// Random-walk drift with an unbounded calibration age has no finite bound.
    #[error("the Cramér-Rao bound is infinite for rho = 1 with an uncalibrated sensor")]
    InfiniteCrb,

    #[error("covariance matrix of sensor {sensor} is not positive definite")]
    SingularCovariance { sensor: usize },

    #[error("Fisher information is singular or ill-conditioned (condition number {condition:e})")]
    SingularFim { condition: f64 },

    #[error("sensors mix stationary (rho < 1) and random-walk (rho = 1) drift")]
    MixedRegime,
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }
}
