use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IoError: {0}")]
    Io(String),
    #[error("{0}")]
    Core(#[from] misspec::Error),
}

impl CliError {
    /// Malformed input is reported as a configuration error even when the
    /// numerical core detected it.
    pub fn normalize(self) -> Self {
        match self {
            CliError::Core(misspec::Error::Config(m)) => CliError::Config(m),
            CliError::Core(misspec::Error::Io(m)) => CliError::Io(m),
            other => other,
        }
    }
}
