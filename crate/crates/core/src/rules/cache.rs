use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::data::CandleSeries;
use crate::error::Result;
use crate::indicators::{self, IndicatorSeries, MaKind};

/// Identifies one indicator computation over the cache's candles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndicatorKey {
    Ma(MaKind, usize),
    Rsi(usize),
    StochK(usize),
    /// `[VI+, VI-]`
    Vortex(usize),
    /// `[rolling mean, rolling population sd]`
    MeanStd(usize),
    Atr(usize),
    /// Rolling `(highest high + lowest low) / 2`.
    Midline(usize),
}

/// Memoizes indicator series for one candle series. Grid searches hit the
/// same indicator windows many times; each is computed once and shared.
/// Safe to use from several threads; a key raced by two threads may be
/// computed twice but the stored value is identical either way.
pub struct IndicatorCache<'a> {
    candles: &'a CandleSeries,
    close: IndicatorSeries,
    map: Mutex<HashMap<IndicatorKey, Arc<Vec<IndicatorSeries>>>>,
}

impl<'a> IndicatorCache<'a> {
    pub fn new(candles: &'a CandleSeries) -> Self {
        Self {
            candles,
            close: IndicatorSeries::from_values(candles.closes()),
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn candles(&self) -> &CandleSeries {
        self.candles
    }

    pub fn close(&self) -> &IndicatorSeries {
        &self.close
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("indicator cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: IndicatorKey) -> Result<Arc<Vec<IndicatorSeries>>> {
        if let Some(hit) = self.map.lock().expect("indicator cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let value = Arc::new(self.compute(key)?);
        let mut map = self.map.lock().expect("indicator cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(value)))
    }

    fn compute(&self, key: IndicatorKey) -> Result<Vec<IndicatorSeries>> {
        let c = self.candles;
        Ok(match key {
            IndicatorKey::Ma(kind, w) => {
                vec![indicators::moving_average(self.close.defined(), w, kind)?]
            }
            IndicatorKey::Rsi(w) => vec![indicators::rsi(self.close.defined(), w)?],
            IndicatorKey::StochK(k) => vec![indicators::stochastic(c, k, 1)?.0],
            IndicatorKey::Vortex(w) => {
                let (p, m) = indicators::vortex(c, w)?;
                vec![p, m]
            }
            IndicatorKey::MeanStd(w) => {
                let (m, s) = indicators::rolling_mean_std(self.close.defined(), w)?;
                vec![m, s]
            }
            IndicatorKey::Atr(w) => vec![indicators::atr(c, w)?],
            IndicatorKey::Midline(w) => vec![indicators::midpoint(c, w)?],
        })
    }
}
