use std::fmt;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Config = 2,
    Io = 3,
    Solver = 4,
    Codec = 5,
}

impl Code {
    pub fn exit_code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

impl CliError {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Code::Config, message)
    }

    /// Prefixes the message with `context`.
    pub fn context(mut self, context: impl fmt::Display) -> Self {
        self.message = format!("{context}: {}", self.message);
        self
    }

    /// `error[<exit code>]: <message>` on a single line.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("error[{}]: {}", self.code.exit_code(), flat.join(" "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<compreg::Error> for CliError {
    fn from(e: compreg::Error) -> Self {
        use compreg::Error as E;
        let code = match &e {
            E::Io(_) | E::Format(_) => Code::Io,
            E::NotConverged { .. } => Code::Solver,
            E::Codec { .. } | E::InvalidCodebook(_) => Code::Codec,
            _ => Code::Config,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Code::Io, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Self::new(Code::Io, e.to_string())
        } else {
            Self::config(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(Code::Io, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
