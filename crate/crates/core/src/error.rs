use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Offered load meets or exceeds capacity; no stationary law exists.
    #[error("queue is unstable: utilization {rho} >= 1")]
    Unstable { rho: f64 },

    #[error("{gates} gates cannot staff both a regular and a pre-check lane")]
    InfeasibleAllocation { gates: u32 },

    #[error("no gate count keeps the mean wait under {wait_cap} s")]
    NoFeasibleGateCount { wait_cap: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
