use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Physics(#[from] qlm_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("indeterminate verdict: {0}")]
    Indeterminate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Physics(qlm_core::Error::InvalidParameter(_)) => 2,
            CliError::Indeterminate(_) => 3,
            CliError::Io(_) | CliError::Physics(_) | CliError::Verification(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Config(_) => "Config",
            CliError::Io(_) => "Io",
            CliError::Physics(e) => e.kind(),
            CliError::Verification(_) => "Verification",
            CliError::Indeterminate(_) => "Indeterminate",
        }
    }

    /// One-line JSON error record for stderr.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
