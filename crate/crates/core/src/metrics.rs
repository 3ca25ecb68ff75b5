//! Instruction counting, warp/wavefront scaling, achieved GIPS and the
//! intensity measures plotted on the horizontal axis of a roofline.
//!
//! Raw counters are `u64`; everything derived is `f64`.
//!
//! # Scaling
//!
//! Instruction counts are divided by the execution-group size (64 threads
//! per wavefront on AMD HPC parts, 32 per warp on NVIDIA) before any rate or
//! intensity is formed. The same raw count therefore yields half the GIPS
//! on a 64-wide machine that it does on a 32-wide one; cross-vendor GIPS
//! comparisons inherit this factor.
//!
//! # Intensity modes
//!
//! * [`IntensityMode::IntensityPerformance`]: scaled instructions divided by
//!   `(bytes read + bytes written) × runtime`. This is the quantity AMD
//!   tables label "inst/byte", although dimensionally it is
//!   inst/(byte·s). It is reproduced as-is.
//! * [`IntensityMode::ClassicPerByte`]: scaled instructions per byte, no
//!   runtime factor.
//! * [`IntensityMode::PerTransaction`]: scaled instructions per 32-byte
//!   memory transaction. Only NVIDIA profilers expose transaction counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::{GpuSpec, Vendor};
use crate::ingest::KernelProfile;

/// Divisor between base units and giga-units.
pub const GIGA: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitConventions {
    pub transaction_bytes: u32,
}

impl Default for UnitConventions {
    fn default() -> Self {
        UnitConventions {
            transaction_bytes: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntensityMode {
    IntensityPerformance,
    ClassicPerByte,
    PerTransaction,
}

impl IntensityMode {
    pub fn short_name(self) -> &'static str {
        match self {
            IntensityMode::IntensityPerformance => "eq2",
            IntensityMode::ClassicPerByte => "perbyte",
            IntensityMode::PerTransaction => "pertxn",
        }
    }

    pub fn is_per_byte(self) -> bool {
        !matches!(self, IntensityMode::PerTransaction)
    }
}

impl fmt::Display for IntensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for IntensityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eq2" | "intensityperformance" => Ok(IntensityMode::IntensityPerformance),
            "perbyte" | "classicperbyte" => Ok(IntensityMode::ClassicPerByte),
            "pertxn" | "pertransaction" => Ok(IntensityMode::PerTransaction),
            other => Err(format!(
                "unknown intensity mode `{other}` (expected eq2, perbyte or pertxn)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MemoryLevel {
    #[serde(rename = "HBM")]
    Hbm,
    L1,
    L2,
}

impl fmt::Display for MemoryLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryLevel::Hbm => "HBM",
            MemoryLevel::L1 => "L1",
            MemoryLevel::L2 => "L2",
        })
    }
}

/// One measured kernel placed on the roofline plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchievedPoint {
    pub kernel_name: String,
    pub gips: f64,
    pub intensity: f64,
    pub intensity_mode: IntensityMode,
    pub memory_level: MemoryLevel,
}

/// AMD instruction total: VALU counts are per SIMD and there are four SIMDs
/// per CU, SALU counts are per CU.
pub fn total_instructions_amd(valu: u64, salu: u64) -> Result<u64> {
    valu.checked_mul(4)
        .and_then(|v| v.checked_add(salu))
        .ok_or(Error::Overflow)
}

pub fn scaled_instructions(instructions: u64, group_size: u32) -> f64 {
    instructions as f64 / f64::from(group_size)
}

fn check_runtime(runtime_s: f64) -> Result<()> {
    if runtime_s > 0.0 && runtime_s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRuntime(runtime_s))
    }
}

/// Achieved GIPS: scaled instructions / (1e9 × runtime).
pub fn achieved_gips(instructions: u64, group_size: u32, runtime_s: f64) -> Result<f64> {
    check_runtime(runtime_s)?;
    Ok(scaled_instructions(instructions, group_size) / (GIGA * runtime_s))
}

/// Scaled instructions / ((bytes read + bytes written) × runtime).
pub fn intensity_performance(
    instructions: u64,
    group_size: u32,
    bytes_read: f64,
    bytes_written: f64,
    runtime_s: f64,
) -> Result<f64> {
    let traffic = bytes_read + bytes_written;
    if traffic.is_nan() || traffic <= 0.0 {
        return Err(Error::ZeroTraffic);
    }
    check_runtime(runtime_s)?;
    Ok(scaled_instructions(instructions, group_size) / (traffic * runtime_s))
}

/// Scaled instructions per byte of memory traffic.
pub fn classic_intensity(instructions: u64, group_size: u32, bytes_total: f64) -> Result<f64> {
    if bytes_total.is_nan() || bytes_total <= 0.0 {
        return Err(Error::ZeroTraffic);
    }
    Ok(scaled_instructions(instructions, group_size) / bytes_total)
}

pub fn transaction_intensity(instructions: u64, group_size: u32, transactions: u64) -> Result<f64> {
    if transactions == 0 {
        return Err(Error::ZeroTransactions);
    }
    Ok(scaled_instructions(instructions, group_size) / transactions as f64)
}

pub fn gbps_to_gtxns(gbps: f64, conv: &UnitConventions) -> f64 {
    gbps / f64::from(conv.transaction_bytes)
}

/// Total instruction count for a profile: the AMD VALU/SALU aggregate, or
/// `inst_executed` on NVIDIA.
pub fn profile_instructions(profile: &KernelProfile) -> Result<u64> {
    match profile.vendor {
        Vendor::Amd => match (profile.valu_instructions, profile.salu_instructions) {
            (None, None) => Err(Error::NoInstructionMetric(profile.kernel_name.clone())),
            (valu, salu) => total_instructions_amd(valu.unwrap_or(0), salu.unwrap_or(0)),
        },
        Vendor::Nvidia => profile
            .executed_instructions
            .ok_or_else(|| Error::NoInstructionMetric(profile.kernel_name.clone())),
    }
}

/// HBM intensity of `profile` under `mode`, given its resolved instruction
/// count.
pub fn profile_intensity(
    profile: &KernelProfile,
    instructions: u64,
    group_size: u32,
    mode: IntensityMode,
) -> Result<f64> {
    match mode {
        IntensityMode::IntensityPerformance => intensity_performance(
            instructions,
            group_size,
            profile.bytes_read,
            profile.bytes_written,
            profile.runtime_s,
        ),
        IntensityMode::ClassicPerByte => classic_intensity(
            instructions,
            group_size,
            profile.bytes_read + profile.bytes_written,
        ),
        IntensityMode::PerTransaction => {
            if profile.vendor == Vendor::Amd {
                return Err(mode_unsupported(mode, profile.vendor));
            }
            let txns = profile.transactions.ok_or_else(|| Error::MissingField {
                kernel: profile.kernel_name.clone(),
                field: "transactions".into(),
            })?;
            transaction_intensity(instructions, group_size, txns)
        }
    }
}

fn mode_unsupported(mode: IntensityMode, vendor: Vendor) -> Error {
    Error::ModeUnsupported {
        mode: mode.to_string(),
        vendor: vendor.to_string(),
    }
}

/// The HBM point for `profile` on `spec`.
pub fn point_for_profile(
    profile: &KernelProfile,
    spec: &GpuSpec,
    mode: IntensityMode,
) -> Result<AchievedPoint> {
    if profile.vendor != spec.vendor {
        return Err(Error::VendorMismatch {
            profile: profile.vendor.to_string(),
            gpu: spec.vendor.to_string(),
        });
    }
    if profile.vendor == Vendor::Amd && mode == IntensityMode::PerTransaction {
        return Err(mode_unsupported(mode, profile.vendor));
    }
    let instructions = profile_instructions(profile)?;
    let group = spec.execution_group_size;
    Ok(AchievedPoint {
        kernel_name: profile.kernel_name.clone(),
        gips: achieved_gips(instructions, group, profile.runtime_s)?,
        intensity: profile_intensity(profile, instructions, group, mode)?,
        intensity_mode: mode,
        memory_level: MemoryLevel::Hbm,
    })
}

/// L1 and L2 points for an NVIDIA profile that carries cache-level
/// transaction counts. Empty for AMD profiles and per-byte modes.
pub fn cache_points_for_profile(
    profile: &KernelProfile,
    spec: &GpuSpec,
    mode: IntensityMode,
) -> Result<Vec<AchievedPoint>> {
    if profile.vendor != Vendor::Nvidia || mode != IntensityMode::PerTransaction {
        return Ok(Vec::new());
    }
    let instructions = profile_instructions(profile)?;
    let group = spec.execution_group_size;
    let gips = achieved_gips(instructions, group, profile.runtime_s)?;
    [
        (MemoryLevel::L1, profile.l1_transactions),
        (MemoryLevel::L2, profile.l2_transactions),
    ]
    .into_iter()
    .filter_map(|(level, txns)| txns.map(|t| (level, t)))
    .map(|(level, txns)| {
        Ok(AchievedPoint {
            kernel_name: profile.kernel_name.clone(),
            gips,
            intensity: transaction_intensity(instructions, group, txns)?,
            intensity_mode: mode,
            memory_level: level,
        })
    })
    .collect()
}
