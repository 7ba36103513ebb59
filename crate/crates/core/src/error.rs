use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("kernel support truncated: fraction {frac:.3e} of the alpha-mass lies outside the measure domain")]
    Truncation { frac: f64 },
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for usage/parameter problems,
    /// 3 for numeric or resource failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::OutOfRange(_)
            | Error::Unsupported(_)
            | Error::Config(_) => 2,
            Error::Resource(_)
            | Error::Numeric(_)
            | Error::Truncation { .. }
            | Error::Estimation(_)
            | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
