use std::fmt;

use lifelong_core::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TRAINING: u8 = 3;
pub const EXIT_EVALUATION: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn config_from(e: Error) -> Self {
        Self::config(e.to_string())
    }

    /// Configuration problems surfacing during training still exit with 2.
    pub fn training(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::config_from(e),
            other => Self::new(EXIT_TRAINING, other.to_string()),
        }
    }

    pub fn evaluation(e: Error) -> Self {
        match e {
            Error::Config(_) => Self::config_from(e),
            other => Self::new(EXIT_EVALUATION, other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
