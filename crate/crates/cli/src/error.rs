/// Failure of a CLI command, mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or configuration; exit code 2.
    #[error("error: {0}")]
    Usage(String),
    /// An internal invariant was violated; exit code 3.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<mirelax_core::Error> for CliError {
    fn from(e: mirelax_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
