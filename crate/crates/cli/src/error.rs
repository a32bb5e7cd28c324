use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Core(qsb_core::Error),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Config {
        path: PathBuf,
        message: String,
    },
    Usage(String),
    /// Requested checks ran and at least one failed.
    Verification(Vec<String>),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<qsb_core::Error> for CliError {
    fn from(e: qsb_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn config(path: &Path, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::Verification(_) => "verification_failed",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            CliError::Core(qsb_core::Error::Infeasible { beta, beta_max }) => {
                v["beta"] = json!(beta);
                v["beta_max"] = json!(beta_max);
            }
            CliError::Io { path, .. } | CliError::Config { path, .. } => {
                v["path"] = json!(path.display().to_string());
            }
            CliError::Verification(failures) => {
                v["failures"] = json!(failures);
            }
            _ => {}
        }
        v
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Config { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Usage(m) => f.write_str(m),
            CliError::Verification(failures) => write!(f, "verification failed: {}", failures.join("; ")),
        }
    }
}

impl std::error::Error for CliError {}
