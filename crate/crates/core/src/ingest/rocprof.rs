use std::collections::BTreeMap;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use super::{RawKernelRecord, SourceFormat};
use crate::error::{Error, Result};

pub(super) fn csv_error(e: csv::Error, line_map: impl Fn(u64) -> u64) -> Error {
    let line = e.position().map_or(0, |p| line_map(p.line()));
    let reason = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => e.to_string(),
    };
    Error::MalformedRow { line, reason }
}

pub(super) fn column_index(headers: &StringRecord) -> Result<BTreeMap<&str, usize>> {
    let mut index = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        if index.insert(h, i).is_some() {
            return Err(Error::MalformedRow {
                line: 1,
                reason: format!("duplicate column `{h}`"),
            });
        }
    }
    Ok(index)
}

/// Parses a rocprof-style per-dispatch CSV.
///
/// Requires a `KernelName` column and either `DurationNs` or both `BeginNs`
/// and `EndNs`. Every other non-empty cell is kept under its column name.
pub fn parse_rocprof_csv(text: &[u8]) -> Result<Vec<RawKernelRecord>> {
    if text.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyInput);
    }
    let mut reader = ReaderBuilder::new().trim(Trim::All).from_reader(text);
    let headers = reader.headers().map_err(|e| csv_error(e, |l| l))?.clone();
    let columns = column_index(&headers)?;

    let name_col = *columns
        .get("KernelName")
        .ok_or_else(|| Error::MissingColumn("KernelName".into()))?;
    let has_duration = columns.contains_key("DurationNs")
        || (columns.contains_key("BeginNs") && columns.contains_key("EndNs"));
    if !has_duration {
        return Err(Error::MissingColumn("DurationNs".into()));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(e, |l| l))?;
        let line = row.position().map_or(0, |p| p.line());
        let kernel_name = row.get(name_col).unwrap_or_default().to_string();
        if kernel_name.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty KernelName".into(),
            });
        }
        let metric_values = headers
            .iter()
            .zip(row.iter())
            .enumerate()
            .filter(|&(i, (_, v))| i != name_col && !v.is_empty())
            .map(|(_, (h, v))| (h.to_string(), v.to_string()))
            .collect();
        records.push(RawKernelRecord {
            kernel_name,
            metric_values,
            source_format: SourceFormat::RocprofCsv,
        });
    }
    Ok(records)
}

/// Writes records back as a rocprof-style CSV: `KernelName` followed by the
/// union of all metric keys in sorted order. Missing cells are left empty.
pub fn write_rocprof_csv(records: &[RawKernelRecord]) -> String {
    let keys: std::collections::BTreeSet<&str> = records
        .iter()
        .flat_map(|r| r.metric_values.keys().map(String::as_str))
        .collect();
    let mut w = WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("KernelName").chain(keys.iter().copied()).collect();
    // Writing to a Vec cannot fail.
    w.write_record(&header).expect("in-memory csv write");
    for r in records {
        let row: Vec<&str> = std::iter::once(r.kernel_name.as_str())
            .chain(
                keys.iter()
                    .map(|k| r.metric_values.get(*k).map_or("", String::as_str)),
            )
            .collect();
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}
