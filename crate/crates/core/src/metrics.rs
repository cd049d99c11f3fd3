//! Log-return accounting, the sharpe-sterling ratio (SSR) and the
//! evaluation metrics ROI, Sharpe, maximum drawdown and average position.
//!
//! Alignment convention: a position decided at bar `t` earns the log return
//! from `t` to `t + 1`, and that product is stored at index `t + 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use crate::data::CandleSeries;
use crate::error::{Error, Result};
use crate::rules::SignalSeries;

/// Denominator guard for [`ssr`].
pub const SSR_EPSILON: f64 = 1e-12;

const SECONDS_PER_DAY: i64 = 86_400;

/// Per-bar log returns. Index 0 has no prior bar and holds 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    /// Series whose realized periods are `periods`, i.e. with a zero
    /// prepended at index 0.
    pub fn from_periods(periods: &[f64]) -> Result<Self> {
        let mut v = Vec::with_capacity(periods.len() + 1);
        v.push(0.0);
        v.extend_from_slice(periods);
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Everything after index 0.
    pub fn realized(&self) -> &[f64] {
        self.values.get(1..).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn negate(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Signed fractions of capital, `|v_t| <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSeries {
    values: Vec<f64>,
}

impl PositionSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if v.abs() > 1.0 {
                return Err(Error::PositionOutOfRange { index: i, value: v });
            }
        }
        Ok(Self { values })
    }

    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn from_signal(signal: &SignalSeries) -> Self {
        Self {
            values: signal.as_f64(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn log_returns(candles: &CandleSeries) -> Result<ReturnSeries> {
    log_returns_from_closes(&candles.closes())
}

pub fn log_returns_from_closes(closes: &[f64]) -> Result<ReturnSeries> {
    if closes.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: closes.len(),
        });
    }
    let mut v = Vec::with_capacity(closes.len());
    v.push(0.0);
    v.extend(closes.windows(2).map(|w| (w[1] / w[0]).ln()));
    ReturnSeries::new(v)
}

/// `p_{t+1} = v_t * r_{t+1}`, with `p_0 = 0`. The position at the final bar
/// earns nothing.
pub fn strategy_returns(
    positions: &PositionSeries,
    returns: &ReturnSeries,
) -> Result<ReturnSeries> {
    if positions.len() != returns.len() {
        return Err(Error::LengthMismatch {
            left: positions.len(),
            right: returns.len(),
        });
    }
    let r = returns.values();
    let mut p = Vec::with_capacity(r.len());
    if !r.is_empty() {
        p.push(0.0);
    }
    p.extend(
        positions
            .values()
            .iter()
            .zip(r.iter().skip(1))
            .map(|(v, r)| v * r),
    );
    Ok(ReturnSeries { values: p })
}

/// SSR over the realized periods of a strategy-return series.
pub fn ssr(per_period: &ReturnSeries) -> Result<f64> {
    if per_period.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: per_period.len(),
        });
    }
    Ok(ssr_of(per_period.realized()))
}

/// `sum(p) / (sigma(p) * |sum of negative p|)`, population sigma, each
/// denominator factor floored at [`SSR_EPSILON`].
pub fn ssr_of(periods: &[f64]) -> f64 {
    ssr_with_epsilon(periods, SSR_EPSILON)
}

pub fn ssr_with_epsilon(periods: &[f64], epsilon: f64) -> f64 {
    if periods.is_empty() {
        return 0.0;
    }
    let total: f64 = periods.iter().sum();
    let neg: f64 = periods.iter().filter(|&&p| p < 0.0).sum::<f64>().abs();
    total / population_std(periods).max(epsilon) / neg.max(epsilon)
}

pub fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Compounded balance path starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityCurve {
    timestamps: Vec<i64>,
    log_increments: Vec<f64>,
    balance: Vec<f64>,
    leverage: f64,
}

impl EquityCurve {
    /// `balance_{t+1} = balance_t * exp(L * v_t * r_{t+1})`.
    pub fn from_positions(
        timestamps: &[i64],
        positions: &PositionSeries,
        returns: &ReturnSeries,
        leverage: f64,
    ) -> Result<Self> {
        let p = strategy_returns(positions, returns)?;
        let inc = p.values().iter().map(|x| leverage * x).collect();
        Self::from_log_increments(timestamps, inc, leverage)
    }

    /// `increments[0]` is ignored for compounding and should be 0.
    pub fn from_log_increments(
        timestamps: &[i64],
        increments: Vec<f64>,
        leverage: f64,
    ) -> Result<Self> {
        if timestamps.len() != increments.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: increments.len(),
            });
        }
        check_leverage(leverage)?;
        if let Some(i) = increments.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut acc = 0.0;
        let balance = increments
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if i > 0 {
                    acc += x;
                }
                acc.exp()
            })
            .collect();
        Ok(Self {
            timestamps: timestamps.to_vec(),
            log_increments: increments,
            balance,
            leverage,
        })
    }

    /// Curve through the given balances; `balances[0]` should be 1.
    pub fn from_balances(timestamps: &[i64], balances: Vec<f64>, leverage: f64) -> Result<Self> {
        if timestamps.len() != balances.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: balances.len(),
            });
        }
        check_leverage(leverage)?;
        if let Some(i) = balances.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::AccountBlown {
                index: i,
                balance: balances[i],
            });
        }
        let mut inc = Vec::with_capacity(balances.len());
        if !balances.is_empty() {
            inc.push(0.0);
        }
        inc.extend(balances.windows(2).map(|w| (w[1] / w[0]).ln()));
        Ok(Self {
            timestamps: timestamps.to_vec(),
            log_increments: inc,
            balance: balances,
            leverage,
        })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn balance(&self) -> &[f64] {
        &self.balance
    }

    pub fn log_increments(&self) -> &[f64] {
        &self.log_increments
    }

    pub fn leverage(&self) -> f64 {
        self.leverage
    }

    pub fn len(&self) -> usize {
        self.balance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balance.is_empty()
    }

    pub fn initial_balance(&self) -> f64 {
        self.balance.first().copied().unwrap_or(1.0)
    }

    pub fn final_balance(&self) -> f64 {
        self.balance.last().copied().unwrap_or(1.0)
    }

    pub fn total_log_return(&self) -> f64 {
        self.log_increments.iter().skip(1).sum()
    }

    /// Log return per UTC calendar date, in date order. Each increment is
    /// booked on the date of the bar where it is realized.
    pub fn daily_log_returns(&self) -> Vec<(i64, f64)> {
        let mut days: BTreeMap<i64, f64> = BTreeMap::new();
        for (i, (&ts, &x)) in self.timestamps.iter().zip(&self.log_increments).enumerate() {
            let entry = days.entry(ts.div_euclid(SECONDS_PER_DAY)).or_insert(0.0);
            if i > 0 {
                *entry += x;
            }
        }
        days.into_iter().collect()
    }

    /// Number of distinct UTC dates carrying bars.
    pub fn trading_days(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for &ts in &self.timestamps {
            let d = ts.div_euclid(SECONDS_PER_DAY);
            if last != Some(d) {
                n += 1;
                last = Some(d);
            }
        }
        n
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "timestamp,balance")?;
        for (ts, b) in self.timestamps.iter().zip(&self.balance) {
            writeln!(out, "{ts},{b}")?;
        }
        Ok(())
    }
}

fn check_leverage(leverage: f64) -> Result<()> {
    if leverage.is_finite() && leverage > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "leverage must be positive, got {leverage}"
        )))
    }
}

/// `(final / initial)^(365 / trading_days) - 1`.
pub fn roi(curve: &EquityCurve, trading_days: usize) -> f64 {
    roi_from_ratio(
        curve.final_balance() / curve.initial_balance(),
        trading_days as f64,
    )
}

pub fn roi_from_ratio(ratio: f64, trading_days: f64) -> f64 {
    ratio.powf(365.0 / trading_days) - 1.0
}

/// Total log return over the population sigma of daily log returns.
pub fn sharpe(curve: &EquityCurve) -> Result<f64> {
    let daily: Vec<f64> = curve
        .daily_log_returns()
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    sharpe_from_daily(&daily)
}

pub fn sharpe_from_daily(daily: &[f64]) -> Result<f64> {
    if daily.len() < 2 {
        return Err(Error::TooFewDays(daily.len()));
    }
    let sd = population_std(daily);
    if daily.iter().all(|&d| d == daily[0]) || sd == 0.0 {
        return Err(Error::ZeroVolatility);
    }
    Ok(daily.iter().sum::<f64>() / sd)
}

/// `min(balance) / balance_0 - 1`.
pub fn max_drawdown(curve: &EquityCurve) -> f64 {
    let min = curve.balance.iter().copied().fold(f64::INFINITY, f64::min);
    if curve.is_empty() {
        0.0
    } else {
        min / curve.initial_balance() - 1.0
    }
}

pub fn average_position(positions: &PositionSeries) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    positions.values.iter().map(|v| v.abs()).sum::<f64>() / positions.len() as f64
}

/// Evaluation metrics for one strategy run. `sharpe` is NaN when undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub roi: f64,
    pub sharpe: f64,
    pub max_drawdown: f64,
    pub avg_position: f64,
    pub ssr: f64,
    pub total_log_return: f64,
    pub trading_days: usize,
}

impl PerformanceReport {
    pub const CSV_FIELDS: [&'static str; 7] = [
        "roi",
        "sharpe",
        "max_drawdown",
        "avg_position",
        "ssr",
        "total_log_return",
        "trading_days",
    ];

    pub fn compute(curve: &EquityCurve, positions: &PositionSeries) -> Self {
        let days = curve.trading_days().max(1);
        Self {
            roi: roi(curve, days),
            sharpe: sharpe(curve).unwrap_or(f64::NAN),
            max_drawdown: max_drawdown(curve),
            avg_position: average_position(positions),
            ssr: ssr_of(curve.log_increments().get(1..).unwrap_or(&[])),
            total_log_return: curve.total_log_return(),
            trading_days: curve.trading_days(),
        }
    }

    pub fn csv_values(&self) -> Vec<String> {
        vec![
            self.roi.to_string(),
            self.sharpe.to_string(),
            self.max_drawdown.to_string(),
            self.avg_position.to_string(),
            self.ssr.to_string(),
            self.total_log_return.to_string(),
            self.trading_days.to_string(),
        ]
    }

    /// One `key: value` line per field.
    pub fn write_key_values<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in Self::CSV_FIELDS.iter().zip(self.csv_values()) {
            writeln!(out, "{k}: {v}")?;
        }
        Ok(())
    }
}

impl fmt::Display for PerformanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ROI {:.4}%  SR {:.4}  MD {:.4}%  AP {:.4}%  SSR {:.4}",
            self.roi * 100.0,
            self.sharpe,
            self.max_drawdown * 100.0,
            self.avg_position * 100.0,
            self.ssr
        )
    }
}
