use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qkam_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Machine-readable failure record printed on stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub status: &'static str,
    pub module: &'static str,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(_) => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (module, kind) = match self {
            CliError::Config(_) => ("cli", "Config".to_string()),
            CliError::Io(_) => ("cli", "Io".to_string()),
            CliError::Core(e) => (e.module(), variant_name(e)),
        };
        ErrorReport { status: "error", module, kind, message: self.to_string(), exit_code: self.exit_code() }
    }
}

fn variant_name(e: &qkam_core::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string()
}
