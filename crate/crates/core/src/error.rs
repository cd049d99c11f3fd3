use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("timestamp not strictly increasing at line {line}")]
    NonMonotonicTimestamp { line: u64 },

    #[error("candle invariant violated at line {line}: {reason}")]
    InvariantViolation { line: u64, reason: String },

    #[error("series too short: need at least {needed} bars, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid split fraction {0}; must lie in (0, 1)")]
    InvalidSplit(f64),

    #[error("invalid window {window} for {indicator}")]
    InvalidWindow {
        indicator: &'static str,
        window: usize,
    },

    #[error("window {window} exceeds series length {len}")]
    WindowExceedsSeries { window: usize, len: usize },

    #[error("band multiplier must be positive and finite, got {0}")]
    InvalidMultiplier(f64),

    #[error("ichimoku windows must satisfy 0 < tenkan <= kijun <= senkou_b, got ({tenkan}, {kijun}, {senkou_b})")]
    InvalidWindowOrder {
        tenkan: usize,
        kijun: usize,
        senkou_b: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("upper threshold {hi} must exceed lower threshold {lo}")]
    ThresholdOrderViolation { hi: f64, lo: f64 },

    #[error("upper band below lower band at index {index}")]
    BandOrderViolation { index: usize },

    #[error("weight vector has {weights} entries but signal matrix has {columns} columns")]
    DimensionMismatch { weights: usize, columns: usize },

    #[error("parameter grid for rule {0} is empty")]
    EmptyGrid(String),

    #[error("invalid parameters for rule {rule}: {reason}")]
    InvalidParams { rule: String, reason: String },

    #[error("population has {got} members, expected {expected}")]
    BadPopulationSize { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("position {value} at index {index} exceeds unit magnitude")]
    PositionOutOfRange { index: usize, value: f64 },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("sharpe ratio needs at least two calendar days, got {0}")]
    TooFewDays(usize),

    #[error("daily returns have zero standard deviation")]
    ZeroVolatility,

    #[error("account blown at bar {index}: balance {balance}")]
    AccountBlown { index: usize, balance: f64 },

    #[error("missing artifact: {}", .0.display())]
    MissingArtifacts(PathBuf),

    #[error("malformed artifact {}: {reason}", .path.display())]
    MalformedArtifact { path: PathBuf, reason: String },
}
