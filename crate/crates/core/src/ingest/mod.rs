//! Profiler and benchmark-log ingestion.
//!
//! Parsers turn text exports into [`RawKernelRecord`]s that keep every cell
//! as the profiler printed it; [`normalize`] then applies unit conversions
//! and produces a [`KernelProfile`]. Profiles can also be supplied directly
//! as JSON, see [`parse_profile_json`].

mod babelstream;
mod number;
mod nvprof;
mod rocprof;

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::Vendor;
use crate::metrics::UnitConventions;

pub use babelstream::{parse_babelstream_log, BandwidthMeasurement, StreamFunction};
pub use nvprof::parse_nvprof_csv;
pub use rocprof::{parse_rocprof_csv, write_rocprof_csv};

use number::{parse_counter, parse_scaled};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceFormat {
    RocprofCsv,
    NvprofCsv,
}

impl SourceFormat {
    pub fn vendor(self) -> Vendor {
        match self {
            SourceFormat::RocprofCsv => Vendor::Amd,
            SourceFormat::NvprofCsv => Vendor::Nvidia,
        }
    }
}

/// One kernel's cells, verbatim. Keys are column names (rocprof) or metric
/// names (nvprof); empty cells are omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawKernelRecord {
    pub kernel_name: String,
    pub metric_values: BTreeMap<String, String>,
    pub source_format: SourceFormat,
}

/// Normalized per-kernel measurement.
///
/// AMD profiles carry `valu_instructions`/`salu_instructions`; NVIDIA
/// profiles carry `executed_instructions` and, optionally, DRAM
/// (`transactions`), L1 and L2 transaction counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelProfile {
    pub kernel_name: String,
    pub vendor: Vendor,
    pub runtime_s: f64,
    pub bytes_read: f64,
    pub bytes_written: f64,
    #[serde(default)]
    pub valu_instructions: Option<u64>,
    #[serde(default)]
    pub salu_instructions: Option<u64>,
    #[serde(default)]
    pub executed_instructions: Option<u64>,
    #[serde(default)]
    pub transactions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1_transactions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_transactions: Option<u64>,
}

impl KernelProfile {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidProfile {
                kernel: self.kernel_name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.kernel_name.is_empty() {
            return fail("kernel_name is empty");
        }
        if !(self.runtime_s > 0.0 && self.runtime_s.is_finite()) {
            return Err(Error::NonPositiveRuntime(self.runtime_s));
        }
        for (field, v) in [
            ("bytes_read", self.bytes_read),
            ("bytes_written", self.bytes_written),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(&format!("{field} must be a non-negative finite number"));
            }
        }
        match self.vendor {
            Vendor::Amd => {
                if self.executed_instructions.is_some()
                    || self.transactions.is_some()
                    || self.l1_transactions.is_some()
                    || self.l2_transactions.is_some()
                {
                    return fail("AMD profiles carry VALU/SALU counts, not executed instructions or transactions");
                }
            }
            Vendor::Nvidia => {
                if self.valu_instructions.is_some() || self.salu_instructions.is_some() {
                    return fail("NVIDIA profiles carry executed instructions, not VALU/SALU counts");
                }
            }
        }
        Ok(())
    }
}

/// Multiplier from the profiler's "KB" to bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KbFactor {
    #[default]
    #[serde(rename = "1024")]
    Binary,
    #[serde(rename = "1000")]
    Decimal,
}

impl FromStr for KbFactor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "1024" => Ok(KbFactor::Binary),
            "1000" => Ok(KbFactor::Decimal),
            other => Err(format!("kb factor must be 1024 or 1000, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormalizeOptions {
    pub kb_factor: KbFactor,
    pub conventions: UnitConventions,
}

fn kb_to_bytes(kernel: &str, column: &str, raw: &str, factor: KbFactor) -> Result<f64> {
    let invalid = || Error::InvalidNumber {
        kernel: kernel.to_string(),
        column: column.to_string(),
        value: raw.to_string(),
    };
    match factor {
        // ×1024 is exact in binary floating point
        KbFactor::Binary => parse_scaled(raw, 0).map(|kb| kb * 1024.0).ok_or_else(invalid),
        KbFactor::Decimal => parse_scaled(raw, 3).ok_or_else(invalid),
    }
}

struct Cells<'a> {
    record: &'a RawKernelRecord,
}

impl<'a> Cells<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.record.metric_values.get(key).map(String::as_str)
    }

    fn invalid(&self, key: &str, raw: &str) -> Error {
        Error::InvalidNumber {
            kernel: self.record.kernel_name.clone(),
            column: key.to_string(),
            value: raw.to_string(),
        }
    }

    fn counter(&self, key: &str) -> Result<Option<u64>> {
        self.raw(key)
            .map(|raw| parse_counter(raw).ok_or_else(|| self.invalid(key, raw)))
            .transpose()
    }

    /// Sum of whichever of `keys` are present; `None` when none are.
    fn counter_sum(&self, keys: &[&str]) -> Result<Option<u64>> {
        let mut total: Option<u64> = None;
        for key in keys {
            if let Some(v) = self.counter(key)? {
                total = Some(total.unwrap_or(0).checked_add(v).ok_or(Error::Overflow)?);
            }
        }
        Ok(total)
    }
}

fn rocprof_runtime(cells: &Cells<'_>) -> Result<f64> {
    if let Some(raw) = cells.raw("DurationNs") {
        return parse_scaled(raw, -9).ok_or_else(|| cells.invalid("DurationNs", raw));
    }
    match (cells.counter("BeginNs")?, cells.counter("EndNs")?) {
        (Some(begin), Some(end)) => {
            let ns = end as i128 - begin as i128;
            parse_scaled(&ns.to_string(), -9).ok_or(Error::Overflow)
        }
        _ => Err(Error::MissingDuration(cells.record.kernel_name.clone())),
    }
}

/// Parses an nvprof-style duration cell. A bare number is nanoseconds; a
/// `ns`, `us`, `ms` or `s` suffix selects the unit.
fn nvprof_runtime(cells: &Cells<'_>) -> Result<f64> {
    let raw = cells
        .raw("duration")
        .ok_or_else(|| Error::MissingDuration(cells.record.kernel_name.clone()))?;
    let trimmed = raw.trim();
    let (digits, shift) = [("ns", -9), ("us", -6), ("ms", -3), ("s", 0)]
        .iter()
        .find_map(|(suffix, shift)| trimmed.strip_suffix(suffix).map(|d| (d, *shift)))
        .unwrap_or((trimmed, -9));
    parse_scaled(digits, shift).ok_or_else(|| cells.invalid("duration", raw))
}

/// Converts a raw record into a [`KernelProfile`].
///
/// AMD byte counts are `FETCH_SIZE`/`WRITE_SIZE` in KB times the configured
/// KB factor. NVIDIA byte counts, when DRAM transaction counts are present,
/// are transactions × transaction size.
pub fn normalize(record: &RawKernelRecord, opts: &NormalizeOptions) -> Result<KernelProfile> {
    let cells = Cells { record };
    let name = &record.kernel_name;
    let profile = match record.source_format {
        SourceFormat::RocprofCsv => {
            let runtime_s = rocprof_runtime(&cells)?;
            let valu = cells.counter("SQ_INSTS_VALU")?;
            let salu = cells.counter("SQ_INSTS_SALU")?;
            if valu.is_none() && salu.is_none() {
                return Err(Error::NoInstructionMetric(name.clone()));
            }
            let bytes = |key: &str| {
                cells
                    .raw(key)
                    .map(|raw| kb_to_bytes(name, key, raw, opts.kb_factor))
                    .transpose()
                    .map(|v| v.unwrap_or(0.0))
            };
            KernelProfile {
                kernel_name: name.clone(),
                vendor: Vendor::Amd,
                runtime_s,
                bytes_read: bytes("FETCH_SIZE")?,
                bytes_written: bytes("WRITE_SIZE")?,
                valu_instructions: Some(valu.unwrap_or(0)),
                salu_instructions: Some(salu.unwrap_or(0)),
                executed_instructions: None,
                transactions: None,
                l1_transactions: None,
                l2_transactions: None,
            }
        }
        SourceFormat::NvprofCsv => {
            let runtime_s = nvprof_runtime(&cells)?;
            let executed = cells
                .counter("inst_executed")?
                .ok_or_else(|| Error::NoInstructionMetric(name.clone()))?;
            let txn_bytes = f64::from(opts.conventions.transaction_bytes);
            let dram_read = cells.counter("dram_read_transactions")?;
            let dram_write = cells.counter("dram_write_transactions")?;
            KernelProfile {
                kernel_name: name.clone(),
                vendor: Vendor::Nvidia,
                runtime_s,
                bytes_read: dram_read.map_or(0.0, |t| t as f64 * txn_bytes),
                bytes_written: dram_write.map_or(0.0, |t| t as f64 * txn_bytes),
                valu_instructions: None,
                salu_instructions: None,
                executed_instructions: Some(executed),
                transactions: cells
                    .counter_sum(&["dram_read_transactions", "dram_write_transactions"])?,
                l1_transactions: cells.counter_sum(&["gld_transactions", "gst_transactions"])?,
                l2_transactions: cells
                    .counter_sum(&["l2_read_transactions", "l2_write_transactions"])?,
            }
        }
    };
    profile.validate()?;
    Ok(profile)
}

/// Parses a JSON array of [`KernelProfile`] objects and validates each.
pub fn parse_profile_json(text: &str) -> Result<Vec<KernelProfile>> {
    let profiles: Vec<KernelProfile> = serde_json::from_str(text)?;
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Off,
    Sum,
    Mean,
}

impl FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "off" => Ok(Aggregate::Off),
            "sum" => Ok(Aggregate::Sum),
            "mean" => Ok(Aggregate::Mean),
            other => Err(format!("aggregate must be off, sum or mean, got `{other}`")),
        }
    }
}

fn add_opt(a: Option<u64>, b: Option<u64>) -> Result<Option<u64>> {
    match (a, b) {
        (None, None) => Ok(None),
        (a, b) => a
            .unwrap_or(0)
            .checked_add(b.unwrap_or(0))
            .map(Some)
            .ok_or(Error::Overflow),
    }
}

fn mean_opt(v: Option<u64>, n: u64) -> Option<u64> {
    // round half up, computed without overflow
    v.map(|s| s / n + u64::from(s % n >= n.div_ceil(2)))
}

/// Merges repeated invocations of the same kernel. Groups keep the order of
/// each kernel's first appearance. `Off` returns the input unchanged.
pub fn aggregate(profiles: Vec<KernelProfile>, how: Aggregate) -> Result<Vec<KernelProfile>> {
    if how == Aggregate::Off {
        return Ok(profiles);
    }
    let mut merged: Vec<(KernelProfile, u64)> = Vec::new();
    let mut index: HashMap<(String, Vendor), usize> = HashMap::new();
    for p in profiles {
        let key = (p.kernel_name.clone(), p.vendor);
        match index.get(&key) {
            None => {
                index.insert(key, merged.len());
                merged.push((p, 1));
            }
            Some(&i) => {
                let (acc, n) = &mut merged[i];
                acc.runtime_s += p.runtime_s;
                acc.bytes_read += p.bytes_read;
                acc.bytes_written += p.bytes_written;
                acc.valu_instructions = add_opt(acc.valu_instructions, p.valu_instructions)?;
                acc.salu_instructions = add_opt(acc.salu_instructions, p.salu_instructions)?;
                acc.executed_instructions =
                    add_opt(acc.executed_instructions, p.executed_instructions)?;
                acc.transactions = add_opt(acc.transactions, p.transactions)?;
                acc.l1_transactions = add_opt(acc.l1_transactions, p.l1_transactions)?;
                acc.l2_transactions = add_opt(acc.l2_transactions, p.l2_transactions)?;
                *n += 1;
            }
        }
    }
    Ok(merged
        .into_iter()
        .map(|(mut p, n)| {
            if how == Aggregate::Mean && n > 1 {
                let k = n as f64;
                p.runtime_s /= k;
                p.bytes_read /= k;
                p.bytes_written /= k;
                p.valu_instructions = mean_opt(p.valu_instructions, n);
                p.salu_instructions = mean_opt(p.salu_instructions, n);
                p.executed_instructions = mean_opt(p.executed_instructions, n);
                p.transactions = mean_opt(p.transactions, n);
                p.l1_transactions = mean_opt(p.l1_transactions, n);
                p.l2_transactions = mean_opt(p.l2_transactions, n);
            }
            p
        })
        .collect())
}
