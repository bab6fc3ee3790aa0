//! Error taxonomy shared by every module.

/// Failure classes surfaced by the toolkit.
///
/// `InvalidArgument` marks precondition violations, `NumericalFailure` marks
/// algorithms that could not complete (non-convergence, loss of positive
/// definiteness), and `MeasurementFailure` marks image measurements that are
/// undefined on the given data (e.g. a profile that never drops to half
/// maximum).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("measurement failure: {0}")]
    MeasurementFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn numerical<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::NumericalFailure(msg.into()))
}

pub(crate) fn measurement<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::MeasurementFailure(msg.into()))
}
