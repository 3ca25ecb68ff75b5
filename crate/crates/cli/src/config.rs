//! Run configuration: a JSON file mirroring [`RunConfig`], overridden field
//! by field by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use roofline_core::{Aggregate, IntensityMode, KbFactor, StreamFunction, TableFormat};
use serde::{Deserialize, Deserializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Rocprof,
    Nvprof,
    ProfileJson,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rocprof" => Ok(InputFormat::Rocprof),
            "nvprof" => Ok(InputFormat::Nvprof),
            "profile-json" | "json" => Ok(InputFormat::ProfileJson),
            other => Err(format!(
                "unknown input format `{other}` (expected rocprof, nvprof or profile-json)"
            )),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Rocprof => "rocprof",
            InputFormat::Nvprof => "nvprof",
            InputFormat::ProfileJson => "profile-json",
        })
    }
}

/// Accepts either a string or a bare JSON number and parses it with
/// `FromStr`, so `"kb_factor": 1024` and `"mode": "eq2"` both work.
fn de_from_str<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: fmt::Display,
{
    let v = Option::<serde_json::Value>::deserialize(d)?;
    let s = match v {
        None | Some(serde_json::Value::Null) => return Ok(None),
        Some(serde_json::Value::String(s)) => s,
        Some(serde_json::Value::Number(n)) => n.to_string(),
        Some(other) => {
            return Err(serde::de::Error::custom(format!(
                "expected a string or number, got {other}"
            )))
        }
    };
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub format: InputFormat,
    pub path: PathBuf,
}

impl FromStr for InputSpec {
    type Err = String;

    /// `<format>:<path>`; the path may itself contain colons.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (fmt, path) = s
            .split_once(':')
            .ok_or_else(|| format!("input `{s}` must look like <format>:<path>"))?;
        if path.is_empty() {
            return Err(format!("input `{s}` has an empty path"));
        }
        Ok(InputSpec {
            format: fmt.parse()?,
            path: PathBuf::from(path),
        })
    }
}

impl<'de> Deserialize<'de> for InputSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Object {
            #[serde(deserialize_with = "de_from_str")]
            format: Option<InputFormat>,
            path: PathBuf,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Short(String),
            Long(Object),
        }
        match Repr::deserialize(d)? {
            Repr::Short(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Long(o) => Ok(InputSpec {
                format: o
                    .format
                    .ok_or_else(|| serde::de::Error::custom("input is missing `format`"))?,
                path: o.path,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableOutput {
    pub format: TableFormat,
    /// `None` writes to stdout.
    pub path: Option<PathBuf>,
}

impl FromStr for TableOutput {
    type Err = String;

    /// `<format>` or `<format>:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (fmt, path) = match s.split_once(':') {
            Some((f, p)) if !p.is_empty() => (f, Some(PathBuf::from(p))),
            Some((f, _)) => (f, None),
            None => (s, None),
        };
        Ok(TableOutput {
            format: fmt.parse()?,
            path,
        })
    }
}

impl<'de> Deserialize<'de> for TableOutput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A config file as written on disk. Every field is optional so flags can
/// fill the gaps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub gpu: Option<String>,
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
    pub bandwidth_log: Option<PathBuf>,
    #[serde(default, deserialize_with = "de_from_str")]
    pub bandwidth_function: Option<StreamFunction>,
    #[serde(default, deserialize_with = "de_from_str")]
    pub intensity_mode: Option<IntensityMode>,
    #[serde(default, deserialize_with = "de_from_str")]
    pub kb_factor: Option<KbFactor>,
    #[serde(default, deserialize_with = "de_from_str")]
    pub aggregate: Option<Aggregate>,
    pub out_svg: Option<PathBuf>,
    pub out_table: Option<TableOutput>,
    pub out_model: Option<PathBuf>,
}

impl ConfigFile {
    /// Loads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.inputs.iter_mut().for_each(|i| rebase(&mut i.path));
        cfg.bandwidth_log.iter_mut().for_each(rebase);
        cfg.out_svg.iter_mut().for_each(rebase);
        cfg.out_model.iter_mut().for_each(rebase);
        if let Some(t) = cfg.out_table.as_mut() {
            t.path.iter_mut().for_each(rebase);
        }
        Ok(cfg)
    }

    /// Fills every unset field of `self` from `fallback`.
    pub fn or(self, fallback: ConfigFile) -> ConfigFile {
        ConfigFile {
            gpu: self.gpu.or(fallback.gpu),
            inputs: if self.inputs.is_empty() {
                fallback.inputs
            } else {
                self.inputs
            },
            bandwidth_log: self.bandwidth_log.or(fallback.bandwidth_log),
            bandwidth_function: self.bandwidth_function.or(fallback.bandwidth_function),
            intensity_mode: self.intensity_mode.or(fallback.intensity_mode),
            kb_factor: self.kb_factor.or(fallback.kb_factor),
            aggregate: self.aggregate.or(fallback.aggregate),
            out_svg: self.out_svg.or(fallback.out_svg),
            out_table: self.out_table.or(fallback.out_table),
            out_model: self.out_model.or(fallback.out_model),
        }
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let gpu = self.gpu.ok_or_else(|| anyhow!("no GPU given (use --gpu)"))?;
        if self.inputs.is_empty() {
            bail!("no inputs given (use --input <format>:<path>)");
        }
        Ok(RunConfig {
            gpu,
            inputs: self.inputs,
            bandwidth_log: self.bandwidth_log,
            bandwidth_function: self.bandwidth_function.unwrap_or(StreamFunction::Copy),
            intensity_mode: self
                .intensity_mode
                .unwrap_or(IntensityMode::IntensityPerformance),
            kb_factor: self.kb_factor.unwrap_or_default(),
            aggregate: self.aggregate.unwrap_or_default(),
            out_svg: self.out_svg,
            out_table: self.out_table,
            out_model: self.out_model,
        })
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gpu: String,
    pub inputs: Vec<InputSpec>,
    pub bandwidth_log: Option<PathBuf>,
    pub bandwidth_function: StreamFunction,
    pub intensity_mode: IntensityMode,
    pub kb_factor: KbFactor,
    pub aggregate: Aggregate,
    pub out_svg: Option<PathBuf>,
    pub out_table: Option<TableOutput>,
    pub out_model: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_spec_parsing() {
        let i: InputSpec = "rocprof:/tmp/a:b.csv".parse().unwrap();
        assert_eq!(i.format, InputFormat::Rocprof);
        assert_eq!(i.path, PathBuf::from("/tmp/a:b.csv"));
        assert!("rocprof".parse::<InputSpec>().is_err());
        assert!("excel:x".parse::<InputSpec>().is_err());
        assert!("nvprof:".parse::<InputSpec>().is_err());
    }

    #[test]
    fn table_output_parsing() {
        let t: TableOutput = "md".parse().unwrap();
        assert_eq!(t.format, TableFormat::Markdown);
        assert_eq!(t.path, None);
        let t: TableOutput = "csv:out/t.csv".parse().unwrap();
        assert_eq!(t.path, Some(PathBuf::from("out/t.csv")));
    }

    #[test]
    fn config_file_fields() {
        let cfg: ConfigFile = serde_json::from_str(
            r#"{"gpu":"mi60","inputs":["rocprof:a.csv",{"format":"profile-json","path":"b.json"}],
                "intensity_mode":"perbyte","kb_factor":1000,"aggregate":"sum",
                "bandwidth_function":"Triad","out_table":"csv:t.csv"}"#,
        )
        .unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.inputs.len(), 2);
        assert_eq!(run.inputs[1].format, InputFormat::ProfileJson);
        assert_eq!(run.intensity_mode, IntensityMode::ClassicPerByte);
        assert_eq!(run.kb_factor, KbFactor::Decimal);
        assert_eq!(run.aggregate, Aggregate::Sum);
        assert_eq!(run.bandwidth_function, StreamFunction::Triad);
    }

    #[test]
    fn unknown_config_field_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"gpu":"mi60","colour":"red"}"#).is_err());
    }

    #[test]
    fn flags_win() {
        let file = ConfigFile {
            gpu: Some("mi60".into()),
            intensity_mode: Some(IntensityMode::ClassicPerByte),
            inputs: vec!["rocprof:a.csv".parse().unwrap()],
            ..Default::default()
        };
        let flags = ConfigFile {
            gpu: Some("mi100".into()),
            ..Default::default()
        };
        let run = flags.or(file).resolve().unwrap();
        assert_eq!(run.gpu, "mi100");
        assert_eq!(run.intensity_mode, IntensityMode::ClassicPerByte);
        assert_eq!(run.inputs.len(), 1);
    }

    #[test]
    fn defaults() {
        let run = ConfigFile {
            gpu: Some("v100".into()),
            inputs: vec!["nvprof:x".parse().unwrap()],
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(run.bandwidth_function, StreamFunction::Copy);
        assert_eq!(run.intensity_mode, IntensityMode::IntensityPerformance);
        assert_eq!(run.kb_factor, KbFactor::Binary);
        assert_eq!(run.aggregate, Aggregate::Off);
        assert!(ConfigFile::default().resolve().is_err());
    }
}
