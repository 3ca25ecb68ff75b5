use std::collections::HashMap;

use csv::{ReaderBuilder, Trim};

use super::rocprof::{column_index, csv_error};
use super::{RawKernelRecord, SourceFormat};
use crate::error::{Error, Result};

/// Parses nvprof `--metrics` CSV output and pivots it to one record per
/// kernel.
///
/// Lines starting with `==` (nvprof's banner and status lines) are skipped.
/// The header must contain `Kernel` and `Metric Name`; the value is taken
/// from `Avg`, falling back to `Max` then `Min` when `Avg` is absent or
/// empty. Kernels appear in order of first occurrence.
pub fn parse_nvprof_csv(text: &[u8]) -> Result<Vec<RawKernelRecord>> {
    let text = String::from_utf8_lossy(text);
    // Keep original line numbers for diagnostics.
    let mut kept = String::new();
    let mut line_numbers = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with("==") || line.trim().is_empty() {
            continue;
        }
        kept.push_str(line);
        kept.push('\n');
        line_numbers.push(i as u64 + 1);
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput);
    }
    let original_line = |l: u64| {
        line_numbers
            .get((l as usize).saturating_sub(1))
            .copied()
            .unwrap_or(l)
    };

    let mut reader = ReaderBuilder::new()
        .trim(Trim::All)
        .from_reader(kept.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| csv_error(e, original_line))?
        .clone();
    let columns = column_index(&headers)?;
    let col = |name: &str| {
        columns
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let kernel_col = col("Kernel")?;
    let metric_col = col("Metric Name")?;
    let value_cols: Vec<usize> = ["Avg", "Max", "Min"]
        .iter()
        .filter_map(|c| columns.get(c).copied())
        .collect();
    if value_cols.is_empty() {
        return Err(Error::MissingColumn("Avg".into()));
    }

    let mut records: Vec<RawKernelRecord> = Vec::new();
    let mut by_kernel: HashMap<String, usize> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(e, original_line))?;
        let line = original_line(row.position().map_or(0, |p| p.line()));
        let malformed = |reason: String| Error::MalformedRow { line, reason };

        let kernel = row.get(kernel_col).unwrap_or_default();
        let metric = row.get(metric_col).unwrap_or_default();
        if kernel.is_empty() {
            return Err(malformed("empty Kernel".into()));
        }
        if metric.is_empty() {
            return Err(malformed("empty Metric Name".into()));
        }
        let value = value_cols
            .iter()
            .filter_map(|&c| row.get(c))
            .find(|v| !v.is_empty());

        let idx = *by_kernel.entry(kernel.to_string()).or_insert_with(|| {
            records.push(RawKernelRecord {
                kernel_name: kernel.to_string(),
                metric_values: Default::default(),
                source_format: SourceFormat::NvprofCsv,
            });
            records.len() - 1
        });
        let values = &mut records[idx].metric_values;
        if values.contains_key(metric) {
            return Err(malformed(format!(
                "duplicate metric `{metric}` for kernel `{kernel}`"
            )));
        }
        if let Some(v) = value {
            values.insert(metric.to_string(), v.to_string());
        }
    }
    Ok(records)
}
