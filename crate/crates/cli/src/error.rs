//! Error taxonomy mirroring the exit-status contract: everything here is an
//! input-side failure (exit 2); failed checks are reported, not raised.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse: line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation: field '{field}'{}: {message}", line_suffix(*.line))]
    Validation {
        field: String,
        line: usize,
        message: String,
    },
    #[error("numerical: while {context}: {message}")]
    Numerical { context: String, message: String },
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line})")
    }
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn validation(field: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            line,
            message: message.into(),
        }
    }

    pub fn numerical(context: impl Into<String>, source: impl std::fmt::Display) -> Self {
        CliError::Numerical {
            context: context.into(),
            message: source.to_string(),
        }
    }
}
