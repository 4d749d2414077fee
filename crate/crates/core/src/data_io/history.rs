//! `report_id,indicator_id,conforming` history files.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_atomic, DataError, FileLock, ResultReport};
use crate::ahp::NonconformityRates;
use crate::grading::Level;

pub const HISTORY_HEADER: [&str; 3] = ["report_id", "indicator_id", "conforming"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistoricalRecord {
    pub report_id: String,
    pub indicator_id: String,
    pub conforming: bool,
}

fn parse_conforming(text: &str) -> Option<bool> {
    match text {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn load_history(path: &Path) -> Result<Vec<HistoricalRecord>, DataError> {
    let bytes = read_file(path)?;
    parse_history(bytes.as_slice(), &path.display().to_string())
}

/// Parses history CSV from any reader; `file` names the source in errors.
pub fn parse_history<R: Read>(reader: R, file: &str) -> Result<Vec<HistoricalRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: u64, field: &str, reason: String| DataError::Parse {
        file: file.to_string(),
        line,
        field: field.to_string(),
        reason,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, "header", e.to_string()))?;
    if headers.iter().ne(HISTORY_HEADER) {
        return Err(parse_err(
            1,
            "header",
            format!("expected {:?}, found {:?}", HISTORY_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, "record", e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let report_id = &row[0];
        let indicator_id = &row[1];
        if report_id.is_empty() {
            return Err(parse_err(line, "report_id", "empty".into()));
        }
        if indicator_id.is_empty() {
            return Err(parse_err(line, "indicator_id", "empty".into()));
        }
        let conforming = parse_conforming(&row[2]).ok_or_else(|| {
            parse_err(line, "conforming", format!("{:?} is not one of true, false, 0, 1", &row[2]))
        })?;
        if !seen.insert((report_id.to_string(), indicator_id.to_string())) {
            return Err(DataError::DuplicateRecord {
                file: file.to_string(),
                line,
                report_id: report_id.to_string(),
                indicator_id: indicator_id.to_string(),
            });
        }
        records.push(HistoricalRecord {
            report_id: report_id.to_string(),
            indicator_id: indicator_id.to_string(),
            conforming,
        });
    }
    Ok(records)
}

fn rows_to_csv(records: &[HistoricalRecord], header: bool) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    if header {
        w.write_record(HISTORY_HEADER).expect("in-memory write");
    }
    for r in records {
        w.write_record([r.report_id.as_str(), r.indicator_id.as_str(), if r.conforming { "true" } else { "false" }])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Serializes records, header included.
pub fn write_history(records: &[HistoricalRecord]) -> Vec<u8> {
    rows_to_csv(records, true)
}

/// Fraction of nonconforming records for each indicator, in the order of
/// `indicator_ids`.
pub fn compute_rates(
    records: &[HistoricalRecord],
    indicator_ids: &[String],
) -> Result<NonconformityRates, DataError> {
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in records {
        let c = counts.entry(r.indicator_id.as_str()).or_default();
        c.0 += 1;
        if !r.conforming {
            c.1 += 1;
        }
    }
    let mut rates = Vec::with_capacity(indicator_ids.len());
    let mut totals = Vec::with_capacity(indicator_ids.len());
    for id in indicator_ids {
        let &(total, failed) = counts
            .get(id.as_str())
            .ok_or_else(|| DataError::MissingIndicatorHistory(id.clone()))?;
        rates.push(failed as f64 / total as f64);
        totals.push(total);
    }
    Ok(NonconformityRates::new(rates, totals)?)
}

/// History rows implied by a scored report: one per graded reading, with
/// `report_id = <run_id>/<item_id>`.
pub fn history_rows(report: &ResultReport) -> Vec<HistoricalRecord> {
    report
        .scores
        .iter()
        .flat_map(|s| {
            let report_id = format!("{}/{}", report.provenance.run_id, s.item_id);
            s.graded.iter().map(move |g| HistoricalRecord {
                report_id: report_id.clone(),
                indicator_id: g.indicator_id.clone(),
                conforming: g.level != Level::Nonconforming,
            })
        })
        .collect()
}

/// Appends the report's per-indicator conformity to a history file.
///
/// Holds `<history>.lock` for the duration, rejects rows that would
/// duplicate an existing `(report_id, indicator_id)` pair, and replaces the
/// file atomically. Existing bytes are preserved verbatim. Returns the
/// appended rows.
pub fn append_history(
    report: &ResultReport,
    history_path: &Path,
) -> Result<Vec<HistoricalRecord>, DataError> {
    let _lock = FileLock::acquire(history_path)?;
    let file = history_path.display().to_string();
    let existing_bytes = match std::fs::read(history_path) {
        Ok(b) => Some(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(DataError::io(history_path, e)),
    };
    let existing = match &existing_bytes {
        Some(b) => parse_history(b.as_slice(), &file)?,
        None => Vec::new(),
    };
    let new_rows = history_rows(report);
    let mut seen: HashSet<(&str, &str)> =
        existing.iter().map(|r| (r.report_id.as_str(), r.indicator_id.as_str())).collect();
    for (offset, r) in new_rows.iter().enumerate() {
        if !seen.insert((r.report_id.as_str(), r.indicator_id.as_str())) {
            return Err(DataError::DuplicateRecord {
                file,
                line: (existing.len() + offset + 2) as u64,
                report_id: r.report_id.clone(),
                indicator_id: r.indicator_id.clone(),
            });
        }
    }

    let mut out = match existing_bytes {
        Some(mut b) => {
            if !b.is_empty() && !b.ends_with(b"\n") {
                b.push(b'\n');
            }
            b.extend(rows_to_csv(&new_rows, false));
            b
        }
        None => rows_to_csv(&new_rows, true),
    };
    out.shrink_to_fit();
    write_atomic(history_path, &out)?;
    Ok(new_rows)
}
