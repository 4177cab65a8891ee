use std::fmt;
use std::process::ExitCode;

#[derive(Debug, PartialEq)]
pub enum CliError {
    /// Invalid flags, config keys or values.
    Config(String),
    Solver(String),
    Io(String),
    /// At least one verification check failed; the report is already out.
    VerifyFailed,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::VerifyFailed => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        })
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> CliError {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::VerifyFailed => f.write_str("verification failed"),
        }
    }
}

impl From<rydpol::Error> for CliError {
    fn from(e: rydpol::Error) -> Self {
        match e {
            rydpol::Error::Domain(_) | rydpol::Error::UnknownPreset { .. } => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}
