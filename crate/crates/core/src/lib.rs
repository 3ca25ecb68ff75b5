//! Instruction roofline models for GPU kernels, built from profiler
//! counter exports.
//!
//! The pipeline is: parse profiler output ([`ingest`]) into
//! [`KernelProfile`]s, derive ceilings from a [`GpuSpec`] and an optional
//! measured bandwidth ([`hardware`]), place each profile on the roofline
//! ([`metrics`]), assemble and classify ([`model`]), then draw or tabulate
//! ([`render`]).

pub mod error;
pub mod hardware;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod render;

pub use error::{Error, Result};
pub use hardware::{ceilings, peak_gips, BandwidthSource, CeilingSet, GpuSpec, Registry, Vendor};
pub use ingest::{
    aggregate, normalize, parse_babelstream_log, parse_nvprof_csv, parse_profile_json,
    parse_rocprof_csv, write_rocprof_csv, Aggregate, BandwidthMeasurement, KbFactor,
    KernelProfile, NormalizeOptions, RawKernelRecord, SourceFormat, StreamFunction,
};
pub use metrics::{
    achieved_gips, classic_intensity, gbps_to_gtxns, intensity_performance, point_for_profile,
    scaled_instructions, total_instructions_amd, transaction_intensity, AchievedPoint,
    IntensityMode, MemoryLevel, UnitConventions,
};
pub use model::{
    attainable_gips, build_model, build_model_with_levels, classify, compare, Bound,
    CompareEntry, ComparisonTable, LevelCeiling, RooflineModel, TableCell, TableMetric, TableRow,
};
pub use render::{plot_transform, render_svg, render_table, LogTransform, PlotOptions, TableFormat};
