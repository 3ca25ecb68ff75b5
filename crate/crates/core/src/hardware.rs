//! Static GPU descriptors and the theoretical ceilings derived from them.
//!
//! The built-in table covers the three accelerators the tool was first
//! validated on. Compute parameters are exact; the AMD theoretical
//! bandwidths are vendor datasheet figures rather than measured values and
//! can be shadowed by a user spec file of the same name.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::BandwidthMeasurement;
use crate::metrics::{gbps_to_gtxns, UnitConventions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vendor {
    #[serde(rename = "AMD")]
    Amd,
    #[serde(rename = "NVIDIA")]
    Nvidia,
}

impl fmt::Display for Vendor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vendor::Amd => "AMD",
            Vendor::Nvidia => "NVIDIA",
        })
    }
}

/// Hardware parameters of one GPU.
///
/// `compute_units` counts CUs on AMD and SMs on NVIDIA;
/// `schedulers_per_unit` counts wavefront or warp schedulers per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpuSpec {
    pub name: String,
    pub vendor: Vendor,
    pub compute_units: u32,
    pub schedulers_per_unit: u32,
    pub ipc: u32,
    pub frequency_ghz: f64,
    /// Threads per wavefront (AMD) or warp (NVIDIA).
    pub execution_group_size: u32,
    pub theoretical_bandwidth_gbps: f64,
}

impl GpuSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidSpec {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.trim().is_empty() {
            return fail("name is empty");
        }
        if self.compute_units == 0 {
            return fail("compute_units must be positive");
        }
        if self.schedulers_per_unit == 0 {
            return fail("schedulers_per_unit must be positive");
        }
        if self.ipc == 0 {
            return fail("ipc must be positive");
        }
        if self.execution_group_size == 0 {
            return fail("execution_group_size must be positive");
        }
        if !(self.frequency_ghz.is_finite() && self.frequency_ghz > 0.0) {
            return fail("frequency_ghz must be a positive finite number");
        }
        if !(self.theoretical_bandwidth_gbps.is_finite() && self.theoretical_bandwidth_gbps > 0.0) {
            return fail("theoretical_bandwidth_gbps must be a positive finite number");
        }
        Ok(())
    }
}

/// Theoretical peak instruction throughput in GIPS:
/// units × schedulers per unit × IPC × frequency (GHz).
pub fn peak_gips(spec: &GpuSpec) -> f64 {
    let issue_slots =
        u64::from(spec.compute_units) * u64::from(spec.schedulers_per_unit) * u64::from(spec.ipc);
    issue_slots as f64 * spec.frequency_ghz
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandwidthSource {
    Theoretical,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeilingSet {
    pub peak_gips: f64,
    pub bandwidth_gbps: f64,
    /// Bandwidth in billions of 32-byte transactions per second.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_gtxns: Option<f64>,
    pub bandwidth_source: BandwidthSource,
}

/// Compute and memory ceilings for `spec`. A measured bandwidth, when given,
/// replaces the datasheet figure.
pub fn ceilings(
    spec: &GpuSpec,
    measured: Option<&BandwidthMeasurement>,
    emit_gtxns: bool,
) -> CeilingSet {
    let (bandwidth_gbps, bandwidth_source) = match measured {
        Some(m) => (m.value_gbps, BandwidthSource::Measured),
        None => (spec.theoretical_bandwidth_gbps, BandwidthSource::Theoretical),
    };
    CeilingSet {
        peak_gips: peak_gips(spec),
        bandwidth_gbps,
        bandwidth_gtxns: emit_gtxns
            .then(|| gbps_to_gtxns(bandwidth_gbps, &UnitConventions::default())),
        bandwidth_source,
    }
}

fn builtin_specs() -> Vec<GpuSpec> {
    vec![
        GpuSpec {
            name: "V100".into(),
            vendor: Vendor::Nvidia,
            compute_units: 80,
            schedulers_per_unit: 4,
            ipc: 1,
            frequency_ghz: 1.530,
            execution_group_size: 32,
            theoretical_bandwidth_gbps: 900.0,
        },
        GpuSpec {
            name: "MI60".into(),
            vendor: Vendor::Amd,
            compute_units: 64,
            schedulers_per_unit: 1,
            ipc: 1,
            frequency_ghz: 1.800,
            execution_group_size: 64,
            // datasheet value
            theoretical_bandwidth_gbps: 1024.0,
        },
        GpuSpec {
            name: "MI100".into(),
            vendor: Vendor::Amd,
            compute_units: 120,
            schedulers_per_unit: 1,
            ipc: 1,
            frequency_ghz: 1.502,
            execution_group_size: 64,
            // datasheet value
            theoretical_bandwidth_gbps: 1228.8,
        },
    ]
}

/// Name-indexed set of GPU specs. Built-ins are always present; user specs
/// with the same (case-insensitive) name replace them.
#[derive(Debug, Clone)]
pub struct Registry {
    specs: BTreeMap<String, GpuSpec>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn builtin() -> Self {
        let specs = builtin_specs()
            .into_iter()
            .map(|s| (s.name.to_lowercase(), s))
            .collect();
        Registry { specs }
    }

    pub fn with_user_specs(user: impl IntoIterator<Item = GpuSpec>) -> Result<Self> {
        let mut reg = Self::builtin();
        for spec in user {
            spec.validate()?;
            reg.specs.insert(spec.name.to_lowercase(), spec);
        }
        Ok(reg)
    }

    /// Builds a registry from the contents of a user spec file: a single
    /// GpuSpec object, an array of them, or nothing at all.
    pub fn from_user_json(text: &str) -> Result<Self> {
        Self::with_user_specs(parse_spec_file(text)?)
    }

    pub fn lookup(&self, name: &str) -> Result<&GpuSpec> {
        self.specs
            .get(&name.trim().to_lowercase())
            .ok_or_else(|| Error::UnknownGpu {
                name: name.to_string(),
                known: self.specs.keys().cloned().collect(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = &GpuSpec> {
        self.specs.values()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

pub fn parse_spec_file(text: &str) -> Result<Vec<GpuSpec>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let value: serde_json::Value = serde_json::from_str(text)?;
    let specs = if value.is_array() {
        serde_json::from_value::<Vec<GpuSpec>>(value)?
    } else {
        vec![serde_json::from_value::<GpuSpec>(value)?]
    };
    Ok(specs)
}
