use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(ConfigError),
    #[error(transparent)]
    Core(#[from] cftrain_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Short category used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "runtime",
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => "io",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            CliError::Config(e) => e.line,
            _ => None,
        }
    }

    /// One-line JSON record describing the failure.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "line": self.line(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}
