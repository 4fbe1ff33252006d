use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("CFO estimation failed: 4th-power peak-to-mean {0:.2} dB below 6 dB")]
    CfoEstimation(f64),
    #[error("synchronization failed: peak-to-second ratio {0:.2} dB below 3 dB")]
    Sync(f64),
    #[error("equalizer collapse: output cross-correlation {0:.3} exceeds 0.9")]
    EqualizerCollapse(f64),
    #[error("error counting failed: {0}")]
    Counting(String),
    #[error("metric domain error: {0}")]
    Domain(String),
    #[error("required OSNR out of range: {0}")]
    OutOfRange(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
