use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Maps, vectors or matrices with inconsistent shapes.
    #[error("spec error: {0}")]
    Spec(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A simulated state or action left the finite range (|entry| > 1e12 or NaN/inf).
    #[error("numeric overflow in rollout {rollout} at t = {t}")]
    NumericOverflow { rollout: usize, t: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("insufficient samples: need more than {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("series too short: {len} observations cannot form a window of length {window}")]
    InsufficientLength { len: usize, window: usize },

    /// The first-stage Gram matrix X1 X1^T is singular, so the conditioning event fails.
    #[error("first-stage Gram matrix is singular (smallest singular value {min_sv:e})")]
    GramSingular { min_sv: f64 },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("rho is unbounded: smallest singular value of DC is {min_sv:e}")]
    UnboundedRho { min_sv: f64 },

    #[error("no sample falls in the queried treatment bin {bin:?}")]
    EmptyTreatmentBin { bin: Vec<usize> },

    #[error("value {value} lies outside every bin of coordinate {coordinate}")]
    OutOfBins { coordinate: usize, value: f64 },

    #[error("adjustment estimate undefined: {undefined} of {occupied} occupied strata lack the treatment")]
    UndefinedEstimate { undefined: usize, occupied: usize },

    #[error("degenerate treatment: residualized treatment has zero variance")]
    DegenerateTreatment,

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ambiguous ordering: {0}")]
    Ambiguity(String),

    #[error("estimator failed on every bootstrap replicate ({failures} failures)")]
    BootstrapFailed { failures: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used for the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Spec(_) => "spec",
            Error::Argument(_) => "argument",
            Error::NumericOverflow { .. } => "numeric_overflow",
            Error::Numeric(_) => "numeric",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::InsufficientLength { .. } => "insufficient_length",
            Error::GramSingular { .. } => "gram_singular",
            Error::DegenerateDesign(_) => "degenerate_design",
            Error::UnboundedRho { .. } => "unbounded_rho",
            Error::EmptyTreatmentBin { .. } => "empty_treatment_bin",
            Error::OutOfBins { .. } => "out_of_bins",
            Error::UndefinedEstimate { .. } => "undefined_estimate",
            Error::DegenerateTreatment => "degenerate_treatment",
            Error::Schema(_) => "schema",
            Error::Parse { .. } => "parse",
            Error::Ambiguity(_) => "ambiguity",
            Error::BootstrapFailed { .. } => "bootstrap_failed",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Toml(_) => "toml",
        }
    }

    /// Process exit code for the CLI. Input problems are 2, numerical failures 3, IO 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spec(_)
            | Error::Argument(_)
            | Error::Schema(_)
            | Error::Parse { .. }
            | Error::Ambiguity(_)
            | Error::InsufficientSamples { .. }
            | Error::InsufficientLength { .. }
            | Error::Toml(_) => 2,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 4,
            _ => 3,
        }
    }
}
