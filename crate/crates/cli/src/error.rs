use thiserror::Error;

/// Failures that end a command, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver aborted: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

/// Errors from the core while setting up a run are config errors.
pub(crate) fn setup(e: kawahara_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

