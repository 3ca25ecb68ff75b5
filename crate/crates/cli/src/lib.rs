//! Command implementations behind the `roofline` binary.
//!
//! Each `cmd_*` function takes resolved configuration and writer handles so
//! it can be driven from tests without spawning a process.

pub mod config;

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use roofline_core::{
    aggregate, build_model, ceilings, compare, normalize, parse_babelstream_log,
    parse_nvprof_csv, parse_profile_json, parse_rocprof_csv, render_svg, render_table,
    BandwidthMeasurement, CompareEntry, IntensityMode, KernelProfile, NormalizeOptions,
    PlotOptions, Registry, RooflineModel,
};

pub use config::{ConfigFile, InputFormat, InputSpec, RunConfig, TableOutput};

/// Environment variable naming a user GPU spec file.
pub const SPECS_ENV: &str = "ROOFLINE_SPECS";

/// Loads the registry, adding specs from `path` when given.
pub fn load_registry(path: Option<&Path>) -> Result<Registry> {
    match path {
        None => Ok(Registry::builtin()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading GPU spec file {}", p.display()))?;
            Registry::from_user_json(&text)
                .with_context(|| format!("loading GPU spec file {}", p.display()))
        }
    }
}

fn load_input(input: &InputSpec, opts: &NormalizeOptions) -> Result<Vec<KernelProfile>> {
    let path = &input.path;
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let ctx = || format!("{} ({})", path.display(), input.format);
    let records = match input.format {
        InputFormat::ProfileJson => {
            let text = String::from_utf8_lossy(&bytes);
            return parse_profile_json(&text).with_context(ctx);
        }
        InputFormat::Rocprof => parse_rocprof_csv(&bytes),
        InputFormat::Nvprof => parse_nvprof_csv(&bytes),
    }
    .with_context(ctx)?;
    records
        .iter()
        .map(|r| normalize(r, opts))
        .collect::<roofline_core::Result<Vec<_>>>()
        .with_context(ctx)
}

/// Reads and normalizes every input, in order, then applies aggregation.
/// Files are parsed on separate threads.
pub fn load_profiles(run: &RunConfig) -> Result<Vec<KernelProfile>> {
    let opts = NormalizeOptions {
        kb_factor: run.kb_factor,
        ..Default::default()
    };
    let per_file: Vec<Result<Vec<KernelProfile>>> = std::thread::scope(|s| {
        let handles: Vec<_> = run
            .inputs
            .iter()
            .map(|input| s.spawn(move || load_input(input, &opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("input parser panicked"))))
            .collect()
    });
    let mut profiles = Vec::new();
    for file in per_file {
        profiles.extend(file?);
    }
    Ok(aggregate(profiles, run.aggregate)?)
}

pub fn load_bandwidth(run: &RunConfig) -> Result<Option<BandwidthMeasurement>> {
    let Some(path) = &run.bandwidth_log else {
        return Ok(None);
    };
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = parse_babelstream_log(&bytes).with_context(|| path.display().to_string())?;
    rows.into_iter()
        .find(|m| m.function == run.bandwidth_function)
        .map(Some)
        .ok_or_else(|| {
            anyhow!(
                "{}: no {} row in bandwidth log",
                path.display(),
                run.bandwidth_function
            )
        })
}

/// Runs the full pipeline for one configuration.
pub fn build_run(run: &RunConfig, registry: &Registry) -> Result<(RooflineModel, Vec<KernelProfile>)> {
    let spec = registry.lookup(&run.gpu)?;
    let profiles = load_profiles(run)?;
    let measured = load_bandwidth(run)?;
    let per_txn = run.intensity_mode == IntensityMode::PerTransaction;
    let c = ceilings(spec, measured.as_ref(), per_txn);
    let model = build_model(spec, &c, &profiles, run.intensity_mode)?;
    Ok((model, profiles))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn model_json(model: &RooflineModel) -> Result<String> {
    let mut s = serde_json::to_string_pretty(model)?;
    s.push('\n');
    Ok(s)
}

fn column_label(model: &RooflineModel, profiles: &[KernelProfile], p: &KernelProfile) -> String {
    if profiles.len() > 1 {
        format!("{}:{}", model.gpu.name, p.kernel_name)
    } else {
        model.gpu.name.clone()
    }
}

fn table_for(model: &RooflineModel, profiles: &[KernelProfile]) -> roofline_core::ComparisonTable {
    let labels: Vec<String> = profiles
        .iter()
        .map(|p| column_label(model, profiles, p))
        .collect();
    let entries: Vec<CompareEntry<'_>> = if profiles.is_empty() {
        vec![CompareEntry {
            label: &model.gpu.name,
            model,
            profile: None,
        }]
    } else {
        profiles
            .iter()
            .zip(&labels)
            .map(|(p, label)| CompareEntry {
                label,
                model,
                profile: Some(p),
            })
            .collect()
    };
    compare(&entries)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Primary {
    Model,
    Svg,
}

/// Writes every requested output. The primary output goes to `stdout` when
/// it has no path.
fn emit(
    run: &RunConfig,
    model: &RooflineModel,
    profiles: &[KernelProfile],
    plot: &PlotOptions,
    primary: Primary,
    stdout: &mut dyn Write,
) -> Result<()> {
    let svg = || render_svg(model, plot).context("rendering SVG");
    match (&run.out_model, primary) {
        (Some(p), _) => write_file(p, &model_json(model)?)?,
        (None, Primary::Model) => stdout.write_all(model_json(model)?.as_bytes())?,
        _ => {}
    }
    match (&run.out_svg, primary) {
        (Some(p), _) => write_file(p, &svg()?)?,
        (None, Primary::Svg) => stdout.write_all(svg()?.as_bytes())?,
        _ => {}
    }
    if let Some(t) = &run.out_table {
        let text = render_table(&table_for(model, profiles), t.format);
        match &t.path {
            Some(p) => write_file(p, &text)?,
            None => stdout.write_all(text.as_bytes())?,
        }
    }
    Ok(())
}

pub fn cmd_specs(registry: &Registry) -> String {
    let mut out = format!(
        "{:<10} {:<7} {:>6} {:>6} {:>4} {:>7} {:>6} {:>10}\n",
        "name", "vendor", "CU/SM", "sched", "IPC", "GHz", "group", "BW GB/s"
    );
    for s in registry.iter() {
        out.push_str(&format!(
            "{:<10} {:<7} {:>6} {:>6} {:>4} {:>7.3} {:>6} {:>10.1}\n",
            s.name,
            s.vendor.to_string(),
            s.compute_units,
            s.schedulers_per_unit,
            s.ipc,
            s.frequency_ghz,
            s.execution_group_size,
            s.theoretical_bandwidth_gbps
        ));
    }
    out
}

/// Builds the model and writes its JSON (to `out_model` or `stdout`), plus
/// any other requested outputs.
pub fn cmd_model(
    run: &RunConfig,
    registry: &Registry,
    plot: &PlotOptions,
    stdout: &mut dyn Write,
) -> Result<RooflineModel> {
    let (model, profiles) = build_run(run, registry)?;
    emit(run, &model, &profiles, plot, Primary::Model, stdout)?;
    Ok(model)
}

/// Builds the model and writes its SVG (to `out_svg` or `stdout`), plus any
/// other requested outputs.
pub fn cmd_plot(
    run: &RunConfig,
    registry: &Registry,
    plot: &PlotOptions,
    stdout: &mut dyn Write,
) -> Result<RooflineModel> {
    let (model, profiles) = build_run(run, registry)?;
    emit(run, &model, &profiles, plot, Primary::Svg, stdout)?;
    Ok(model)
}

/// Tabulates several runs side by side.
///
/// A run whose GPU is unknown is dropped with a warning. A run whose inputs
/// fail to load keeps its column, with measured rows shown as `n/a`.
/// Fails only when no column survives.
pub fn cmd_compare(
    runs: &[RunConfig],
    registry: &Registry,
    out: &TableOutput,
    stdout: &mut dyn Write,
    warnings: &mut dyn Write,
) -> Result<()> {
    let mut columns: Vec<(RooflineModel, Vec<KernelProfile>)> = Vec::new();
    for run in runs {
        let spec = match registry.lookup(&run.gpu) {
            Ok(s) => s,
            Err(e) => {
                writeln!(warnings, "warning: skipping `{}`: {e}", run.gpu)?;
                continue;
            }
        };
        let profiles = load_profiles(run).unwrap_or_else(|e| {
            let _ = writeln!(warnings, "warning: {}: {e:#}", run.gpu);
            Vec::new()
        });
        let measured = load_bandwidth(run).unwrap_or_else(|e| {
            let _ = writeln!(warnings, "warning: {}: {e:#}", run.gpu);
            None
        });
        let per_txn = run.intensity_mode == IntensityMode::PerTransaction;
        let c = ceilings(spec, measured.as_ref(), per_txn);
        match build_model(spec, &c, &[], run.intensity_mode) {
            Ok(model) => columns.push((model, profiles)),
            Err(e) => writeln!(warnings, "warning: skipping `{}`: {e}", run.gpu)?,
        }
    }
    if columns.is_empty() {
        return Err(anyhow!("no GPU could be tabulated"));
    }

    let labels: Vec<Vec<String>> = columns
        .iter()
        .map(|(m, ps)| ps.iter().map(|p| column_label(m, ps, p)).collect())
        .collect();
    let mut entries = Vec::new();
    for ((model, profiles), labels) in columns.iter().zip(&labels) {
        if profiles.is_empty() {
            entries.push(CompareEntry {
                label: &model.gpu.name,
                model,
                profile: None,
            });
        }
        for (p, label) in profiles.iter().zip(labels) {
            entries.push(CompareEntry {
                label,
                model,
                profile: Some(p),
            });
        }
    }
    let text = render_table(&compare(&entries), out.format);
    match &out.path {
        Some(p) => write_file(p, &text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}
