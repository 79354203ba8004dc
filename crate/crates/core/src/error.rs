use std::path::PathBuf;

use crate::model::Subsystem;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("structural angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("structural vector ({a}, {b}) is not normalized (norm {norm})")]
    NotNormalized { a: f64, b: f64, norm: f64 },

    #[error("pulse sequences need between 1 and {max} pulses, got {got}")]
    PulseCount { got: usize, max: usize },

    #[error("expected exactly {expected} pulses, got {got}")]
    WrongPulseCount { expected: usize, got: usize },

    #[error("return amplitude of subsystem {subsystem} has imaginary part {imag:e}")]
    ImaginaryAmplitude { subsystem: Subsystem, imag: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mechanism-guided objective requires a target mechanism")]
    MissingTarget,

    #[error("invalid pulse pair ({i}, {j}) for a {n}-pulse sequence")]
    InvalidPair { i: usize, j: usize, n: usize },

    #[error("time step {dt} exceeds the limit {limit} for pulse duration {duration}")]
    StepTooLarge { dt: f64, limit: f64, duration: f64 },

    #[error("pulse envelopes overlap (gap {0} < 0)")]
    OverlappingPulses(f64),

    #[error("norm drift {drift:e} in column {column}; reduce the time step (dt = {dt})")]
    NormDrift { column: usize, drift: f64, dt: f64 },

    #[error("no records pass the error cut {0:e}")]
    EmptySelection(f64),

    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("line {line}: stored {field} does not match the value recomputed from the protocol")]
    Integrity { line: usize, field: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
