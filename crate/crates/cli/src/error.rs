use std::path::PathBuf;

use thiserror::Error;

/// Input errors. Every variant maps to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("cannot parse {field}: {source}")]
    Expr { field: String, source: fedosov::ExprError },
    #[error(transparent)]
    Structure(#[from] fedosov::Error),
    #[error("no check matches `{0}`")]
    UnknownCheck(String),
    #[error("unknown example `{0}` (available: flat_darboux, dilation, cp2)")]
    UnknownExample(String),
}
