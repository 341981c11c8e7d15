use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of its allowed range or inconsistent.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("zone {zone} does not contain any voxel center of the monitoring grid")]
    ZoneOutsideGrid { zone: String },

    #[error("logs are not tick-aligned at record {index} (scan tick {scan_tick:?}, motion tick {motion_tick:?})")]
    Misaligned {
        index: usize,
        scan_tick: Option<u64>,
        motion_tick: Option<u64>,
    },

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::ZoneOutsideGrid { .. }
                | Error::Misaligned { .. }
                | Error::EmptyInput(_)
                | Error::Parse { .. }
        )
    }
}
