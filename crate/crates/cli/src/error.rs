use std::fmt;
use std::process::ExitCode;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Config = 2,
    Data = 3,
    Transport = 4,
    NonConvergence = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(status: Status, error: impl Into<anyhow::Error>) -> Self {
        Self {
            status,
            error: error.into(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new(Status::Config, anyhow::anyhow!("{message}"))
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Self::new(Status::Data, anyhow::anyhow!("{message}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a fallible result with the exit status its error maps to.
pub trait WithStatus<T> {
    fn status(self, status: Status) -> CliResult<T>;
    fn config_err(self) -> CliResult<T>;
    fn data_err(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> WithStatus<T> for Result<T, E> {
    fn status(self, status: Status) -> CliResult<T> {
        self.map_err(|e| CliError::new(status, e))
    }

    fn config_err(self) -> CliResult<T> {
        self.status(Status::Config)
    }

    fn data_err(self) -> CliResult<T> {
        self.status(Status::Data)
    }
}
