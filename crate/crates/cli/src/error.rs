use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Validation { path: String, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed for {failed} of {total} cases")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn validation(path: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Validation {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 validation, 2 runtime or numerical failure,
    /// 3 a verification case that did not pass.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Numerical(_) | CliError::Io { .. } => 2,
            CliError::Verification { .. } => 3,
        }
    }
}

impl From<twistube::Error> for CliError {
    fn from(e: twistube::Error) -> Self {
        use twistube::Error as E;
        match e {
            E::NonConvergence { .. } | E::Numerical(_) | E::Incomplete { .. } => CliError::Numerical(e.to_string()),
            other => CliError::validation("input", other.to_string()),
        }
    }
}
