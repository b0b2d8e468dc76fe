use std::path::PathBuf;

use ergotau::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Schema(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::Config(_) => "InvalidConfig",
            CliError::Schema(_) => "SchemaMismatch",
        }
    }

    /// 0 is success; 2 validation, 3 numerical failure, 4 resource cap, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::NonUnitary(_)) => 3,
            CliError::Core(Error::DepthOverflow { .. }) => 4,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }

    /// Single-line JSON diagnostic.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
