use polymer_core::Error;

/// Exit codes: 1 for schema and usage errors, 2 for runtime failures, 3 when
/// the charge law fails the shape hypothesis.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0} hard check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(Error::Dimension(_) | Error::InvalidParameter(_)) => 1,
            CliError::Core(Error::HypothesisNotCertified(_)) => 3,
            CliError::Core(_) | CliError::Io(_) | CliError::VerifyFailed(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
