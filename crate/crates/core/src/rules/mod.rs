//! Crossover rules that turn indicators into ternary long/neutral/short
//! signals, and the 16-rule feature catalog built on them.
//!
//! Four rule shapes exist:
//!
//! 1. series crossing series: `+1` above, `-1` below;
//! 2. series crossing a constant threshold, same polarity;
//! 3. series against an upper and a lower threshold, neutral in between;
//! 4. series against an upper and a lower band series, neutral in between.
//!
//! Shapes 1 and 2 carry the previous signal through exact ties. Any bar
//! where an input is still warming up emits a neutral signal.

mod cache;
mod catalog;

use std::io::{self, Write};

pub use cache::{IndicatorCache, IndicatorKey};
pub use catalog::{
    build_features, default_catalog, ParamGrid, RuleKind, RuleParams, RuleSpec, CATALOG_SIZE,
};

use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;

/// A ternary market stance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Signal {
    Short = -1,
    Neutral = 0,
    Long = 1,
}

impl Signal {
    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self as i8 as f64
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Signal::Short),
            0 => Some(Signal::Neutral),
            1 => Some(Signal::Long),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalSeries {
    values: Vec<Signal>,
}

impl SignalSeries {
    pub fn new(values: Vec<Signal>) -> Self {
        Self { values }
    }

    /// Builds from raw integers, rejecting anything outside {-1, 0, 1}.
    pub fn from_i8(values: &[i8]) -> Result<Self> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                Signal::from_i8(v).ok_or_else(|| Error::InvalidParams {
                    rule: "signal".into(),
                    reason: format!("value {v} at index {i} is not in {{-1, 0, 1}}"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn values(&self) -> &[Signal] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Signal {
        self.values[i]
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|s| s.as_f64()).collect()
    }
}

/// Column-major feature matrix: one signal column per rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalMatrix {
    rule_ids: Vec<String>,
    columns: Vec<SignalSeries>,
}

impl SignalMatrix {
    pub fn new(rule_ids: Vec<String>, columns: Vec<SignalSeries>) -> Result<Self> {
        if rule_ids.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: rule_ids.len(),
                right: columns.len(),
            });
        }
        if let Some(first) = columns.first() {
            for c in &columns {
                if c.len() != first.len() {
                    return Err(Error::LengthMismatch {
                        left: first.len(),
                        right: c.len(),
                    });
                }
            }
        }
        Ok(Self { rule_ids, columns })
    }

    pub fn rule_ids(&self) -> &[String] {
        &self.rule_ids
    }

    pub fn columns(&self) -> &[SignalSeries] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &SignalSeries {
        &self.columns[i]
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, SignalSeries::len)
    }

    pub fn row(&self, t: usize) -> Vec<i8> {
        self.columns.iter().map(|c| c.get(t).value()).collect()
    }

    /// Restricts every column to rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> SignalMatrix {
        SignalMatrix {
            rule_ids: self.rule_ids.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| SignalSeries::new(c.values[start..end].to_vec()))
                .collect(),
        }
    }

    /// `timestamp` followed by one integer column per rule.
    pub fn write_csv<W: Write>(&self, timestamps: &[i64], mut out: W) -> io::Result<()> {
        write!(out, "timestamp")?;
        for id in &self.rule_ids {
            write!(out, ",{id}")?;
        }
        writeln!(out)?;
        for (t, ts) in timestamps.iter().enumerate().take(self.n_rows()) {
            write!(out, "{ts}")?;
            for c in &self.columns {
                write!(out, ",{}", c.get(t).value())?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

/// Two-sided comparison with tie carry. `None` from `cmp` marks undefined
/// input and emits neutral.
fn carry_signal(n: usize, cmp: impl Fn(usize) -> Option<std::cmp::Ordering>) -> SignalSeries {
    use std::cmp::Ordering::*;
    let mut state = Signal::Neutral;
    let values = (0..n)
        .map(|t| {
            state = match cmp(t) {
                None => Signal::Neutral,
                Some(Greater) => Signal::Long,
                Some(Less) => Signal::Short,
                Some(Equal) => state,
            };
            state
        })
        .collect();
    SignalSeries::new(values)
}

fn compare(x: f64, y: f64) -> std::cmp::Ordering {
    x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
}

/// Shape 1: `+1` while `a > b`, `-1` while `a < b`.
pub fn signal_cat1(a: &IndicatorSeries, b: &IndicatorSeries) -> Result<SignalSeries> {
    check_len(a.len(), b.len())?;
    Ok(carry_signal(a.len(), |t| match (a.get(t), b.get(t)) {
        (Some(x), Some(y)) => Some(compare(x, y)),
        _ => None,
    }))
}

/// Shape 2: `+1` while `a > threshold`, `-1` while below.
pub fn signal_cat2(a: &IndicatorSeries, threshold: f64) -> SignalSeries {
    carry_signal(a.len(), |t| a.get(t).map(|x| compare(x, threshold)))
}

/// Shape 3: `+1` above `threshold_hi`, `-1` below `threshold_lo`, neutral
/// on the closed interval between them.
pub fn signal_cat3(
    a: &IndicatorSeries,
    threshold_hi: f64,
    threshold_lo: f64,
) -> Result<SignalSeries> {
    if threshold_hi.is_nan() || threshold_lo.is_nan() || threshold_hi <= threshold_lo {
        return Err(Error::ThresholdOrderViolation {
            hi: threshold_hi,
            lo: threshold_lo,
        });
    }
    let values = a
        .iter()
        .map(|v| match v {
            Some(x) if x > threshold_hi => Signal::Long,
            Some(x) if x < threshold_lo => Signal::Short,
            _ => Signal::Neutral,
        })
        .collect();
    Ok(SignalSeries::new(values))
}

/// Shape 4: `+1` above `upper`, `-1` below `lower`, neutral inside.
pub fn signal_cat4(
    a: &IndicatorSeries,
    upper: &IndicatorSeries,
    lower: &IndicatorSeries,
) -> Result<SignalSeries> {
    check_len(a.len(), upper.len())?;
    check_len(a.len(), lower.len())?;
    let mut values = Vec::with_capacity(a.len());
    for t in 0..a.len() {
        let s = match (a.get(t), upper.get(t), lower.get(t)) {
            (Some(x), Some(u), Some(l)) => {
                if u < l {
                    return Err(Error::BandOrderViolation { index: t });
                }
                if x > u {
                    Signal::Long
                } else if x < l {
                    Signal::Short
                } else {
                    Signal::Neutral
                }
            }
            _ => Signal::Neutral,
        };
        values.push(s);
    }
    Ok(SignalSeries::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::{bollinger, moving_average, MaKind};
    use Signal::*;

    fn series(v: &[f64]) -> IndicatorSeries {
        IndicatorSeries::from_values(v.to_vec())
    }

    #[test]
    fn cat1_above_and_ties() {
        let a = series(&[2.0, 3.0, 4.0]);
        let b = series(&[1.0, 1.0, 1.0]);
        assert_eq!(signal_cat1(&a, &b).unwrap().values(), &[Long, Long, Long]);
        let same = series(&[1.0, 2.0, 3.0]);
        assert_eq!(
            signal_cat1(&same, &same).unwrap().values(),
            &[Neutral, Neutral, Neutral]
        );
        // Tie after a strict inequality carries the last signal.
        let a = series(&[1.0, 2.0, 2.0, 1.0]);
        let b = series(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(
            signal_cat1(&a, &b).unwrap().values(),
            &[Short, Short, Short, Short]
        );
        assert!(matches!(
            signal_cat1(&a, &series(&[1.0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cat1_close_crossing_ma10() {
        // Close falls for 15 bars then rises: crosses above its SMA(10) once.
        let closes: Vec<f64> = (0..30)
            .map(|i| {
                if i < 15 {
                    2.0 - 0.01 * i as f64
                } else {
                    1.86 + 0.02 * (i - 15) as f64
                }
            })
            .collect();
        let close = series(&closes);
        let ma = moving_average(&closes, 10, MaKind::Sma).unwrap();
        let s = signal_cat1(&close, &ma).unwrap();
        assert!(s.values()[..9].iter().all(|&v| v == Neutral));
        let k = (9..30).find(|&t| closes[t] > ma.get(t).unwrap()).unwrap();
        assert!(s.values()[9..k].iter().all(|&v| v == Short));
        assert!(s.values()[k..].iter().all(|&v| v == Long));
        assert_eq!(s.get(k - 1), Short);
        assert_eq!(s.get(k), Long);
    }

    #[test]
    fn cat2_threshold() {
        assert_eq!(signal_cat2(&series(&[70.0; 4]), 50.0).values(), &[Long; 4]);
        assert_eq!(
            signal_cat2(&series(&[40.0, 45.0, 55.0, 60.0]), 50.0).values(),
            &[Short, Short, Long, Long]
        );
        assert_eq!(
            signal_cat2(&series(&[50.0; 3]), 50.0).values(),
            &[Neutral; 3]
        );
        let warm = IndicatorSeries::with_warmup(3, vec![60.0]);
        assert_eq!(signal_cat2(&warm, 50.0).values(), &[Neutral, Neutral, Long]);
    }

    #[test]
    fn cat3_bands_of_constants() {
        assert_eq!(
            signal_cat3(&series(&[40.0, 50.0, 69.9]), 70.0, 30.0)
                .unwrap()
                .values(),
            &[Neutral; 3]
        );
        assert_eq!(
            signal_cat3(&series(&[71.0, 99.0]), 70.0, 30.0)
                .unwrap()
                .values(),
            &[Long; 2]
        );
        assert_eq!(
            signal_cat3(&series(&[10.0, 30.0, 70.0]), 70.0, 30.0)
                .unwrap()
                .values(),
            &[Short, Neutral, Neutral]
        );
        assert!(matches!(
            signal_cat3(&series(&[1.0]), 30.0, 70.0),
            Err(Error::ThresholdOrderViolation { .. })
        ));
    }

    #[test]
    fn cat4_band_series() {
        let closes = [1.0, 1.01, 0.99, 1.0, 1.005, 0.998, 1.002, 1.0];
        let b = bollinger(&closes, 4, 2.0).unwrap();
        let s = signal_cat4(&series(&closes), &b.upper, &b.lower).unwrap();
        assert!(s.values().iter().all(|&v| v == Neutral));

        let upper = series(&[2.0, 2.0, 2.0]);
        let lower = series(&[1.0, 1.0, 1.0]);
        let s = signal_cat4(&series(&[1.5, 2.5, 0.5]), &upper, &lower).unwrap();
        assert_eq!(s.values(), &[Neutral, Long, Short]);

        let bad_lower = series(&[1.0, 2.5, 1.0]);
        assert!(matches!(
            signal_cat4(&series(&[1.5; 3]), &upper, &bad_lower),
            Err(Error::BandOrderViolation { index: 1 })
        ));
    }

    #[test]
    fn matrix_shape_and_csv() {
        let a = SignalSeries::from_i8(&[1, 0, -1]).unwrap();
        let b = SignalSeries::from_i8(&[-1, -1, 1]).unwrap();
        assert!(SignalSeries::from_i8(&[2]).is_err());
        let m = SignalMatrix::new(vec!["a".into(), "b".into()], vec![a, b]).unwrap();
        assert_eq!(m.row(2), vec![-1, 1]);
        let mut out = Vec::new();
        m.write_csv(&[1, 2, 3], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "timestamp,a,b\n1,1,-1\n2,0,-1\n3,-1,1\n"
        );
        let short = SignalSeries::from_i8(&[1]).unwrap();
        assert!(SignalMatrix::new(
            vec!["a".into(), "b".into()],
            vec![m.column(0).clone(), short]
        )
        .is_err());
    }
}
