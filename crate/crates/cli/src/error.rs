use std::io;
use std::path::PathBuf;

use rkrp_core::{DecodeError, PartitionError};
use thiserror::Error;

/// Process exit codes. `2` is left to clap for usage errors.
pub mod exit {
    pub const CONFIG: i32 = 1;
    pub const IO: i32 = 3;
    pub const PARTITION: i32 = 4;
    pub const DECODE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("partition: {0}")]
    Partition(#[from] PartitionError),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Core(#[from] rkrp_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Output(_) | CliError::Parse { .. } | CliError::Csv(_) => exit::IO,
            CliError::Partition(_)
            | CliError::Decode(DecodeError::Partition(_))
            | CliError::Core(rkrp_core::Error::Partition(_)) => exit::PARTITION,
            CliError::Decode(_)
            | CliError::Core(rkrp_core::Error::Decode(_))
            | CliError::Core(rkrp_core::Error::Pattern(_)) => exit::DECODE,
            CliError::Config(_) | CliError::Core(_) | CliError::Json(_) => exit::CONFIG,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
