pub mod bench;
pub mod demand;
pub mod select;
pub mod signtest;

use f3a_core::Error;

/// Errors with the documented exit codes: input problems map to 2,
/// domain problems to 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Domain(String),
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Domain(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::InvalidArgument(m) => CliError::Domain(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

/// Reads a file as input (exit 2 on failure), naming it in the error.
pub fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Writes a text output file, appending the trailing newline if missing.
pub fn write_output(path: &std::path::Path, content: &str) -> Result<(), CliError> {
    let mut owned = content.to_string();
    if !owned.ends_with('\n') {
        owned.push('\n');
    }
    std::fs::write(path, owned).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
