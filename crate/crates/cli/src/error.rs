use std::fmt;

use mldict::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter values (exit 2).
    Config(String),
    /// Unreadable, malformed or unsuitable input data (exit 3).
    Data(String),
    /// A numerical routine failed (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

/// Prefixes the message of a library error with the file it concerns.
pub fn at<T>(path: impl AsRef<std::path::Path>, r: mldict::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.as_ref().display())),
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.as_ref().display())),
        CliError::Numerical(m) => CliError::Numerical(format!("{}: {m}", path.as_ref().display())),
    })
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        if e.is_numerical() {
            return Self::Numerical(msg);
        }
        match e {
            Error::InvalidK(_) | Error::InvalidArgument(_) | Error::InvalidVariance(_) | Error::SubsetTooLarge { .. } => {
                Self::Config(msg)
            }
            _ => Self::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}
