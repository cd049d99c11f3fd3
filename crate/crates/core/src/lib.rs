//! Rule-based trading features, SSR-driven parameter search, genetic
//! weighting of rule signals, and a zero-fee backtester.

pub mod backtest;
pub mod data;
pub mod error;
pub mod indicators;
pub mod metrics;
pub mod optimize;
pub mod pipeline;
pub mod rules;

pub use error::{Error, Result};
