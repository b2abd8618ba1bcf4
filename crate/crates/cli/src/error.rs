use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Solver(#[from] cuspsteklov::Error),

    #[error("inverse iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("property failed: {0}")]
    Property(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(cuspsteklov::Error::NonConvergence { .. }) => 3,
            CliError::Solver(_) | CliError::Io { .. } => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Property(_) => 4,
        }
    }

    /// Short machine-readable category for the diagnostic JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Solver(_) | CliError::Io { .. } => "solver",
            CliError::NonConvergence(_) => "non_convergence",
            CliError::Property(_) => "property",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
