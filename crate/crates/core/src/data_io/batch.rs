//! `item_id,indicator_id,measured,standard,deviation_pct` batch files.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use super::{parse_number, read_file, DataError};
use crate::grading::{IndicatorReading, ReadingValue, RubricSet};
use crate::scoring::InspectionItem;

pub const BATCH_HEADER: [&str; 5] = ["item_id", "indicator_id", "measured", "standard", "deviation_pct"];

pub fn load_batch(path: &Path, rubrics: &RubricSet) -> Result<Vec<InspectionItem>, DataError> {
    let bytes = read_file(path)?;
    parse_batch(bytes.as_slice(), &path.display().to_string(), rubrics)
}

/// Parses a batch. Items keep the order of their first row; every item
/// must carry exactly one reading per rubric indicator.
pub fn parse_batch<R: Read>(reader: R, file: &str, rubrics: &RubricSet) -> Result<Vec<InspectionItem>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: u64, field: &str, reason: String| DataError::Parse {
        file: file.to_string(),
        line,
        field: field.to_string(),
        reason,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, "header", e.to_string()))?;
    if headers.iter().ne(BATCH_HEADER) {
        return Err(parse_err(1, "header", format!("expected {:?}", BATCH_HEADER.join(","))));
    }

    let mut items: Vec<(u64, InspectionItem)> = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, "record", e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let (item_id, key) = (&row[0], &row[1]);
        if item_id.is_empty() {
            return Err(parse_err(line, "item_id", "empty".into()));
        }
        let (indicator_id, variant) = rubrics
            .resolve_key(key)
            .ok_or_else(|| parse_err(line, "indicator_id", format!("{key:?} does not name a rubric indicator")))?;
        if let Err(e) = rubrics.rubric(indicator_id, variant) {
            let hint = rubrics
                .indicator(indicator_id)
                .map(|s| s.variant_keys.join(", "))
                .unwrap_or_default();
            return Err(parse_err(line, "indicator_id", format!("{e}; use {indicator_id}_<variant> with one of [{hint}]")));
        }

        let num = |idx: usize| -> Result<Option<f64>, DataError> {
            let text = &row[idx];
            if text.is_empty() {
                return Ok(None);
            }
            parse_number(text).map(Some).map_err(|reason| parse_err(line, BATCH_HEADER[idx], reason))
        };
        let (measured, standard, deviation) = (num(2)?, num(3)?, num(4)?);
        let value = match (measured, standard, deviation) {
            (None, None, Some(deviation_pct)) => ReadingValue::Deviation { deviation_pct },
            (_, _, Some(_)) => {
                return Err(DataError::BothFormsPresent { file: file.to_string(), line });
            }
            (Some(_), Some(s), None) if s == 0.0 => {
                return Err(parse_err(line, "standard", "standard value must be nonzero".into()));
            }
            (Some(measured), Some(standard), None) => ReadingValue::Measured { measured, standard },
            (Some(_), None, None) => return Err(parse_err(line, "standard", "missing".into())),
            (None, Some(_), None) => return Err(parse_err(line, "measured", "missing".into())),
            (None, None, None) => {
                return Err(parse_err(line, "deviation_pct", "row needs measured+standard or deviation_pct".into()));
            }
        };
        if !seen.insert((item_id.to_string(), indicator_id.to_string())) {
            return Err(parse_err(
                line,
                "indicator_id",
                format!("second reading for item {item_id}, indicator {indicator_id}"),
            ));
        }
        let reading = IndicatorReading {
            indicator_id: indicator_id.to_string(),
            variant: variant.map(str::to_string),
            value,
        };
        match items.iter_mut().find(|(_, it)| it.item_id == item_id) {
            Some((_, it)) => it.readings.push(reading),
            None => items.push((line, InspectionItem { item_id: item_id.to_string(), readings: vec![reading] })),
        }
    }

    for (line, item) in &items {
        for spec in rubrics.indicators() {
            if !item.readings.iter().any(|r| r.indicator_id == spec.id) {
                return Err(DataError::MissingReading {
                    file: file.to_string(),
                    line: *line,
                    item_id: item.item_id.clone(),
                    indicator_id: spec.id.clone(),
                });
            }
        }
    }
    Ok(items.into_iter().map(|(_, it)| it).collect())
}

/// Serializes items back to the batch format. Numbers use the shortest
/// representation that round-trips.
pub fn write_batch(items: &[InspectionItem]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BATCH_HEADER).expect("in-memory write");
    for item in items {
        for r in &item.readings {
            let key = match &r.variant {
                Some(v) => format!("{}_{v}", r.indicator_id),
                None => r.indicator_id.clone(),
            };
            let (m, s, d) = match r.value {
                ReadingValue::Measured { measured, standard } => (measured.to_string(), standard.to_string(), String::new()),
                ReadingValue::Deviation { deviation_pct } => (String::new(), String::new(), deviation_pct.to_string()),
            };
            w.write_record([item.item_id.as_str(), key.as_str(), &m, &s, &d]).expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}
