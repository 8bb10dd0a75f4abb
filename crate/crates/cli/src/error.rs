use thiserror::Error;

/// Failures of a CLI run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or parameters: exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Solver or I/O failure: exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<review_pricing::Error> for CliError {
    fn from(err: review_pricing::Error) -> Self {
        use review_pricing::Error as E;
        match err {
            E::InvalidParameter { .. }
            | E::CapExceeded { .. }
            | E::NotSymmetric
            | E::NoLattice
            | E::BelowThreshold { .. }
            | E::EmptySeedBand { .. } => {
                CliError::Config(err.to_string())
            }
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}
