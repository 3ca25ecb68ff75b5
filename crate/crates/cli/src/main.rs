use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use roofline_cli::{
    cmd_compare, cmd_model, cmd_plot, cmd_specs, load_registry, ConfigFile, InputSpec,
    TableOutput, SPECS_ENV,
};
use roofline_core::{
    Aggregate, IntensityMode, KbFactor, PlotOptions, StreamFunction, TableFormat,
};

#[derive(Parser)]
#[command(name = "roofline", version, about = "Instruction roofline models from GPU profiler exports")]
struct Cli {
    /// User GPU spec file (JSON); overrides $ROOFLINE_SPECS.
    #[arg(long, global = true)]
    specs: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List known GPU specs.
    Specs,
    /// Build a roofline model and write it as JSON.
    Model(RunArgs),
    /// Build a roofline model and render it as SVG.
    Plot(RunArgs),
    /// Tabulate several GPUs side by side.
    Compare(CompareArgs),
}

#[derive(Args, Default)]
struct SharedFlags {
    /// Intensity mode: eq2, perbyte or pertxn.
    #[arg(long)]
    mode: Option<IntensityMode>,
    /// Bytes per profiler KB: 1024 or 1000.
    #[arg(long)]
    kb: Option<KbFactor>,
    /// Merge repeated kernel invocations: off, sum or mean.
    #[arg(long)]
    aggregate: Option<Aggregate>,
    /// Table output as <format>[:<path>] (markdown, csv, plain).
    #[arg(long)]
    out_table: Option<TableOutput>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gpu: Option<String>,
    /// Profile input as <format>:<path> (rocprof, nvprof, profile-json).
    #[arg(long = "input")]
    inputs: Vec<InputSpec>,
    /// BabelStream run log used for the bandwidth ceiling.
    #[arg(long)]
    bandwidth_log: Option<PathBuf>,
    /// Which benchmark row to use: Copy, Mul, Add, Triad or Dot.
    #[arg(long)]
    bandwidth_fn: Option<StreamFunction>,
    #[command(flatten)]
    shared: SharedFlags,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    #[arg(long)]
    out_model: Option<PathBuf>,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// A JSON run configuration per GPU (repeatable).
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    /// A GPU and one input as <gpu>=<format>:<path> (repeatable).
    #[arg(long = "entry")]
    entries: Vec<String>,
    #[command(flatten)]
    shared: SharedFlags,
}

impl SharedFlags {
    fn as_config(&self) -> ConfigFile {
        ConfigFile {
            intensity_mode: self.mode,
            kb_factor: self.kb,
            aggregate: self.aggregate,
            out_table: self.out_table.clone(),
            ..Default::default()
        }
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<roofline_cli::RunConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            gpu: self.gpu.clone(),
            inputs: self.inputs.clone(),
            bandwidth_log: self.bandwidth_log.clone(),
            bandwidth_function: self.bandwidth_fn,
            out_svg: self.out_svg.clone(),
            out_model: self.out_model.clone(),
            ..self.shared.as_config()
        };
        flags.or(file).resolve()
    }

    fn plot_options(&self) -> PlotOptions {
        PlotOptions {
            width_px: self.width,
            height_px: self.height,
            title: self.title.clone(),
            ..Default::default()
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let specs = cli
        .specs
        .or_else(|| std::env::var_os(SPECS_ENV).map(PathBuf::from));
    let registry = load_registry(specs.as_deref())?;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Specs => stdout.write_all(cmd_specs(&registry).as_bytes())?,
        Command::Model(args) => {
            cmd_model(&args.resolve()?, &registry, &args.plot_options(), &mut stdout)?;
        }
        Command::Plot(args) => {
            cmd_plot(&args.resolve()?, &registry, &args.plot_options(), &mut stdout)?;
        }
        Command::Compare(args) => {
            let flags = args.shared.as_config();
            let mut runs = Vec::new();
            for path in &args.configs {
                runs.push(flags.clone().or(ConfigFile::load(path)?).resolve()?);
            }
            for entry in &args.entries {
                let Some((gpu, input)) = entry.split_once('=') else {
                    bail!("entry `{entry}` must look like <gpu>=<format>:<path>");
                };
                let file = ConfigFile {
                    gpu: Some(gpu.to_string()),
                    inputs: vec![input.parse().map_err(anyhow::Error::msg)?],
                    ..Default::default()
                };
                runs.push(flags.clone().or(file).resolve()?);
            }
            if runs.is_empty() {
                bail!("compare needs at least one --config or --entry");
            }
            let out = args.shared.out_table.clone().unwrap_or(TableOutput {
                format: TableFormat::Markdown,
                path: None,
            });
            cmd_compare(&runs, &registry, &out, &mut stdout, &mut std::io::stderr())?;
        }
    }
    stdout.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
