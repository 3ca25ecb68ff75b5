use thiserror::Error;

/// Errors produced anywhere in the ingest → metrics → model → render pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown GPU `{name}` (known: {})", known.join(", "))]
    UnknownGpu { name: String, known: Vec<String> },

    #[error("invalid GPU spec `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },

    #[error("input is empty")]
    EmptyInput,

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("no benchmark function rows (Copy, Mul, Add, Triad, Dot) found")]
    NoFunctionsFound,

    #[error("kernel `{0}` has no usable duration")]
    MissingDuration(String),

    #[error("kernel `{0}` has no instruction metric")]
    NoInstructionMetric(String),

    #[error("kernel `{kernel}`: cannot parse `{value}` in `{column}` as a number")]
    InvalidNumber {
        kernel: String,
        column: String,
        value: String,
    },

    #[error("invalid profile `{kernel}`: {reason}")]
    InvalidProfile { kernel: String, reason: String },

    #[error("instruction count overflowed 64 bits")]
    Overflow,

    #[error("runtime must be strictly positive, got {0}")]
    NonPositiveRuntime(f64),

    #[error("memory traffic is zero; intensity is undefined")]
    ZeroTraffic,

    #[error("transaction count is zero; intensity is undefined")]
    ZeroTransactions,

    #[error("intensity mode {mode} is not supported for {vendor} profiles")]
    ModeUnsupported { mode: String, vendor: String },

    #[error("kernel `{kernel}` is missing `{field}` required by the selected mode")]
    MissingField { kernel: String, field: String },

    #[error("profile vendor {profile} does not match GPU vendor {gpu}")]
    VendorMismatch { profile: String, gpu: String },

    #[error("inconsistent mode: {0}")]
    InconsistentMode(String),

    #[error("value {0} cannot be placed on a logarithmic axis")]
    NonPositiveValue(f64),

    #[error("invalid plot options: {0}")]
    InvalidPlotOptions(String),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
