//! Scan archives, trajectory text files and the polar-image dataset adapter.

mod archive;
mod oxford;
mod trajectory;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use archive::{decode_scan_archive, encode_scan_archive, read_scan_archive, write_scan_archive, ScanArchive};
pub use oxford::{decode_oxford_scan, read_oxford_polar, OXFORD_RANGE_RESOLUTION, OXFORD_SWEEP_PERIOD};
pub use trajectory::{
    parse_trajectory, read_trajectory, trajectory_to_string, write_trajectory, TrajectoryEstimate,
    TrajectoryFormat,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file at byte {offset}: {reason}")]
    MalformedFile { offset: u64, reason: String },
    #[error("malformed file at line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("cannot store scan: {0}")]
    Unsupported(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_malformed(&self) -> bool {
        matches!(
            self,
            IoError::MalformedFile { .. } | IoError::MalformedLine { .. } | IoError::MissingMetadata(_)
        )
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| IoError::io(path, e))
}
