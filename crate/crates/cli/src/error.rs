use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid model at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("{0}")]
    Computation(#[from] precision_core::Error),

    #[error("{0}\nhint: run `precision mc` for a Monte Carlo estimate")]
    UnsupportedAnalytic(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io(io),
            other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Computation(_) | CliError::UnsupportedAnalytic(_) | CliError::Io(_) => 4,
        }
    }
}
