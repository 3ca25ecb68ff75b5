use std::fmt;

use serde::{Deserialize, Serialize};

use super::number::parse_scaled;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamFunction {
    Copy,
    Mul,
    Add,
    Triad,
    Dot,
}

impl StreamFunction {
    pub const ALL: [StreamFunction; 5] = [
        StreamFunction::Copy,
        StreamFunction::Mul,
        StreamFunction::Add,
        StreamFunction::Triad,
        StreamFunction::Dot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StreamFunction::Copy => "Copy",
            StreamFunction::Mul => "Mul",
            StreamFunction::Add => "Add",
            StreamFunction::Triad => "Triad",
            StreamFunction::Dot => "Dot",
        }
    }
}

impl fmt::Display for StreamFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StreamFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown benchmark function `{s}`"))
    }
}

/// A measured sustained bandwidth, in decimal GB/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthMeasurement {
    pub function: StreamFunction,
    pub value_gbps: f64,
    pub source_line: String,
}

/// Unit of the rate column.
#[derive(Debug, Clone, Copy)]
enum RateUnit {
    Mega,
    Giga,
    Mebi,
    Gibi,
}

impl RateUnit {
    fn from_header(line: &str) -> Option<RateUnit> {
        [
            ("MiBytes/sec", RateUnit::Mebi),
            ("GiBytes/sec", RateUnit::Gibi),
            ("MBytes/sec", RateUnit::Mega),
            ("GBytes/sec", RateUnit::Giga),
        ]
        .into_iter()
        .find_map(|(tag, unit)| line.contains(tag).then_some(unit))
    }

    fn to_gbps(self, raw: &str) -> Option<f64> {
        match self {
            RateUnit::Mega => parse_scaled(raw, -3),
            RateUnit::Giga => parse_scaled(raw, 0),
            RateUnit::Mebi => parse_scaled(raw, 0).map(|v| v * 1_048_576.0 / 1e9),
            RateUnit::Gibi => parse_scaled(raw, 0).map(|v| v * 1_073_741_824.0 / 1e9),
        }
    }
}

/// Extracts the results table of a STREAM-style run log.
///
/// Rows start with a function name followed by the rate column. The unit
/// defaults to decimal MBytes/sec and follows the most recent header line
/// that names a rate unit.
pub fn parse_babelstream_log(text: &[u8]) -> Result<Vec<BandwidthMeasurement>> {
    let text = String::from_utf8_lossy(text);
    let mut unit = RateUnit::Mega;
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some(u) = RateUnit::from_header(line) {
            unit = u;
            continue;
        }
        let mut fields = line.split_whitespace();
        let Some(function) = fields
            .next()
            .and_then(|f| StreamFunction::ALL.into_iter().find(|s| s.name() == f))
        else {
            continue;
        };
        let Some(value_gbps) = fields.next().and_then(|v| unit.to_gbps(v)) else {
            continue;
        };
        if value_gbps > 0.0 {
            out.push(BandwidthMeasurement {
                function,
                value_gbps,
                source_line: line.trim_end().to_string(),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::NoFunctionsFound);
    }
    Ok(out)
}
