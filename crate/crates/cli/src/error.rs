use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read config {path}: {reason}")]
    ConfigFile { path: PathBuf, reason: String },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] vmpg::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 1 for anything the user can fix in the spec, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => 1,
            CliError::Core(e) => match e {
                vmpg::Error::InvalidParameter { .. }
                | vmpg::Error::InvalidPartition { .. }
                | vmpg::Error::Parse { .. }
                | vmpg::Error::EmptyData { .. }
                | vmpg::Error::Csv(_)
                | vmpg::Error::Io(_) => 1,
                _ => 2,
            },
            CliError::Output { .. } => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
