use std::fmt;

/// A failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing files, invalid configuration. Exit 2.
    Usage(String),
    /// Input data violates its contract. Exit 3.
    Data(String),
    /// The engine produced something it must never produce. Exit 4.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }

    /// Attaches the file the error came from.
    pub fn context(self, what: impl fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
            CliError::Invariant(m) => CliError::Invariant(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<sight::Error> for CliError {
    fn from(e: sight::Error) -> Self {
        if e.is_data_contract() || matches!(e, sight::Error::InsufficientData(_)) {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
