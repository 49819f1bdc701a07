use thiserror::Error;

/// CLI failure, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, unreadable input or an invalid request (exit 2).
    #[error("{0}")]
    Config(String),
    /// The solver failed on valid input (exit 3).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ttc_core::Error> for CliError {
    fn from(e: ttc_core::Error) -> Self {
        match e {
            ttc_core::Error::Numerical(m) => CliError::Numerical(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<image::ImageError> for CliError {
    fn from(e: image::ImageError) -> Self {
        CliError::Config(format!("image: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::CliError::Config(format!($($arg)*))
    };
}
pub(crate) use config_err;
