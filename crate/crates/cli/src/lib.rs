//! Library side of the `entrolab` command: configuration, sweeps, the
//! invariant and order-kernel suites, and report assembly.

pub mod cat;
pub mod config;
pub mod corpus;
pub mod estimate;
pub mod report;
pub mod verify;

use entrolab_core::metric::MetricError;
use entrolab_core::systems::SystemError;
use thiserror::Error;

/// Version stamped into every JSON artifact and accepted in config files.
pub const SCHEMA_VERSION: u32 = 1;

/// Errors carry their process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration, fixture or input data.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    /// A suite found a violation; the payload is the report line to print.
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Failed(_) => 4,
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Io { .. } | SystemError::Metric(MetricError::Io { .. }) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}
