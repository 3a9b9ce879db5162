use std::fmt;

/// Process exit codes. Stable; scripts may rely on them.
pub mod exit {
    pub const OTHER: i32 = 1;
    pub const GENERATE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const INGEST: i32 = 4;
    pub const MISMATCH: i32 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches an exit code and a context prefix to any displayable error.
pub trait WithCode<T> {
    fn code(self, code: i32, context: &str) -> CliResult<T>;
}

impl<T, E: fmt::Display> WithCode<T> for Result<T, E> {
    fn code(self, code: i32, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::new(code, format!("{context}: {e}")))
    }
}
