//! Run configuration and file formats: field dumps, mode tables, run
//! metadata, index maps and V-parameter sweeps.

pub mod config;
pub mod dump;
pub mod report;

use thiserror::Error;

pub use config::{DInterpretation, GridSection, RunConfig, WindowKind};
pub use dump::{read_field, read_field_bytes, write_field, write_field_bytes, write_field_csv};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("not a field dump: magic {found:?}, expected \"PCF1\"")]
    Magic { found: [u8; 4] },
    #[error("unsupported field dump version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("truncated field dump: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("invalid field dump header: {0}")]
    Header(String),
    #[error("serialization: {0}")]
    Serialize(String),
}

impl IoError {
    pub(crate) fn at(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
