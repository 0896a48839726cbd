use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-monotone time at row {row}: {prev} -> {t}")]
    NonMonotoneTime { row: usize, prev: f64, t: f64 },
    #[error("empty file")]
    EmptyFile,
    #[error("empty channel")]
    EmptyChannel,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("timeline [{start}, {end}] extends beyond channel support [{lo}, {hi}]")]
    OutOfSupport { start: f64, end: f64, lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero-norm accelerometer vector")]
    ZeroAccel,
    #[error("collinear points")]
    Collinear,
    #[error("undefined-COT: speed {0} m/s at or below the guard")]
    UndefinedCot(f64),
    #[error("non-positive data at point {0}")]
    NonPositiveData(usize),
    #[error("singular normal equations")]
    Singular,
    #[error("degenerate lap: {0}")]
    DegenerateLap(String),
    #[error("no lap found")]
    NoLapFound,
    #[error("missing corner index for track {0}")]
    MissingCorner(usize),
    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
