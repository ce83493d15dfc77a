use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the signal/raster pipeline.
#[derive(Debug, Error)]
pub enum SnnError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a number")]
    BadCell {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },

    #[error("{path}: {msg}")]
    BadFormat { path: PathBuf, msg: String },

    #[error("signal has no channels")]
    EmptySignal,

    #[error("cutoff {cutoff_hz} Hz is at or above the Nyquist frequency {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("bin size {bin} exceeds channel length {len}")]
    BinTooLarge { bin: usize, len: usize },

    #[error("kernel length must be odd, got {0}")]
    EvenKernel(usize),

    #[error("signal value {value} at channel {channel}, sample {sample} is outside [0, 1]")]
    ValueOutOfRange {
        value: f64,
        channel: usize,
        sample: usize,
    },

    #[error("mask length {mask} does not match raster train count {trains}")]
    MaskLengthMismatch { mask: usize, trains: usize },

    #[error("STP cannot be finalized before the stop condition or the end of the data")]
    StpNotStopped,

    #[error("dimension mismatch: {msg}")]
    DimensionMismatch { msg: String },

    #[error("raster has zero trains")]
    EmptyRaster,

    #[error("rasters have different timestep counts: {a} vs {b}")]
    TimestepMismatch { a: usize, b: usize },

    #[error("{0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, SnnError>;
