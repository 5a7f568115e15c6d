use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Core(#[from] eqvol_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// The error as a JSON object with a stable `kind`.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config {
                line,
                column,
                message,
            } => {
                json!({"kind": "config", "line": line, "column": column, "message": message})
            }
            CliError::Validation { field, message } => {
                json!({"kind": "validation", "field": field, "message": message})
            }
            CliError::Core(e) => json!({"kind": e.kind(), "message": e.to_string()}),
            CliError::Io { path, source } => {
                json!({"kind": "io", "path": path, "message": source.to_string()})
            }
        }
    }
}
