//! File formats: inspection history, batch measurements, rubric and
//! matrix configs, and the JSON result reports.

mod batch;
mod history;
mod report;

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ahp::AhpError;
use crate::grading::{GradingError, RubricSet};

pub use batch::{load_batch, parse_batch, write_batch, BATCH_HEADER};
pub use history::{
    append_history, compute_rates, history_rows, load_history, parse_history, write_history,
    HistoricalRecord, HISTORY_HEADER,
};
pub use report::{
    load_matrix, read_report, read_weights, write_json, write_report, InputDigest, ManualMatrix,
    MethodWeights, Provenance, ResultReport, WeightsReport, WeightsSource,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{file}:{line}: field {field}: {reason}")]
    Parse { file: String, line: u64, field: String, reason: String },
    #[error("{file}:{line}: duplicate record for report {report_id}, indicator {indicator_id}")]
    DuplicateRecord { file: String, line: u64, report_id: String, indicator_id: String },
    #[error("{file}:{line}: row has both measured/standard and deviation_pct")]
    BothFormsPresent { file: String, line: u64 },
    #[error("{file}: item {item_id} (first seen line {line}) has no reading for indicator {indicator_id}")]
    MissingReading { file: String, line: u64, item_id: String, indicator_id: String },
    #[error("no history records for indicator {0}")]
    MissingIndicatorHistory(String),
    #[error("{}: locked by another writer (remove {} if stale)", .path.display(), .lock.display())]
    Locked { path: PathBuf, lock: PathBuf },
    #[error(transparent)]
    Ahp(#[from] AhpError),
    #[error("{file}: {source}")]
    Rubric { file: String, source: GradingError },
}

impl DataError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, DataError::Io { .. } | DataError::Locked { .. })
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|e| DataError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String, DataError> {
    Ok(sha256_hex(&read_file(path)?))
}

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over
/// `path`. Readers see either the old or the new contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp.{}", std::process::id()));
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(DataError::io(path, e));
    }
    Ok(())
}

/// Advisory single-writer lock: `<path>.lock`, created exclusively and
/// removed on drop.
pub struct FileLock {
    lock: PathBuf,
}

impl FileLock {
    pub fn acquire(path: &Path) -> Result<Self, DataError> {
        let mut lock = path.as_os_str().to_owned();
        lock.push(".lock");
        let lock = PathBuf::from(lock);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { lock })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                Err(DataError::Locked { path: path.to_path_buf(), lock })
            }
            Err(e) => Err(DataError::io(&lock, e)),
        }
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

pub fn load_rubric(path: &Path) -> Result<RubricSet, DataError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| json_error(path, e))
}

pub(crate) fn json_error(path: &Path, e: serde_json::Error) -> DataError {
    DataError::Parse {
        file: path.display().to_string(),
        line: e.line() as u64,
        field: format!("column {}", e.column()),
        reason: e.to_string(),
    }
}

/// Parses a CSV number, accepting U+2212 as a minus sign.
pub(crate) fn parse_number(text: &str) -> Result<f64, String> {
    let cleaned = text.trim().replace('\u{2212}', "-");
    match cleaned.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("{text:?} is not a finite number")),
        Err(_) => Err(format!("{text:?} is not a number")),
    }
}
