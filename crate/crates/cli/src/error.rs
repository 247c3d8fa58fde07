use serde_json::json;
use thiserror::Error;

/// Exit code for a completed run.
pub const EXIT_OK: i32 = 0;
/// Bad config or input that fails validation.
pub const EXIT_INVALID: i32 = 2;
/// Numerical or I/O failure.
pub const EXIT_FAILURE: i32 = 3;
/// `--expect` classification came out negative.
pub const EXIT_EXPECTATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] ringdyn::Error),

    #[error("expected {expected}, but the trajectory is not")]
    Expectation { expected: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Validation(_) => EXIT_INVALID,
            CliError::Core(ringdyn::Error::Invalid(_) | ringdyn::Error::InfeasibleProfile { .. }) => {
                EXIT_INVALID
            }
            CliError::Core(_) | CliError::Io(_) => EXIT_FAILURE,
            CliError::Expectation { .. } => EXIT_EXPECTATION,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Validation(_) => "invalid",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.kind(),
            CliError::Expectation { .. } => "expectation",
        }
    }

    /// The JSON object printed on standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Config { field, .. } = self {
            obj["field"] = json!(field);
        }
        obj
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
