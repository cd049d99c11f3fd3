use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use super::cache::{IndicatorCache, IndicatorKey};
use super::{signal_cat1, signal_cat2, signal_cat3, signal_cat4, SignalMatrix, SignalSeries};
use crate::data::CandleSeries;
use crate::error::{Error, Result};
use crate::indicators::{bands_from, senkou_a, smooth, IndicatorSeries, MaKind};

pub const CATALOG_SIZE: usize = 16;

const MAX_PARAMS: usize = 3;

/// The sixteen catalog rules. Each binds indicators to one of the four
/// crossover shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    CloseSma,
    SmaCross,
    CloseEma,
    EmaCross,
    CloseDema,
    CloseTema,
    StochKd,
    Vortex,
    RsiLevel,
    StochLevel,
    RsiBand,
    StochBand,
    CloseBollinger,
    CloseKeltner,
    CloseCloud,
    SmaBollinger,
}

impl RuleKind {
    pub const ALL: [RuleKind; CATALOG_SIZE] = [
        RuleKind::CloseSma,
        RuleKind::SmaCross,
        RuleKind::CloseEma,
        RuleKind::EmaCross,
        RuleKind::CloseDema,
        RuleKind::CloseTema,
        RuleKind::StochKd,
        RuleKind::Vortex,
        RuleKind::RsiLevel,
        RuleKind::StochLevel,
        RuleKind::RsiBand,
        RuleKind::StochBand,
        RuleKind::CloseBollinger,
        RuleKind::CloseKeltner,
        RuleKind::CloseCloud,
        RuleKind::SmaBollinger,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            RuleKind::CloseSma => "close_x_sma",
            RuleKind::SmaCross => "sma_fast_x_slow",
            RuleKind::CloseEma => "close_x_ema",
            RuleKind::EmaCross => "ema_fast_x_slow",
            RuleKind::CloseDema => "close_x_dema",
            RuleKind::CloseTema => "close_x_tema",
            RuleKind::StochKd => "stoch_k_x_d",
            RuleKind::Vortex => "vortex_plus_x_minus",
            RuleKind::RsiLevel => "rsi_x_level",
            RuleKind::StochLevel => "stoch_k_x_level",
            RuleKind::RsiBand => "rsi_band",
            RuleKind::StochBand => "stoch_k_band",
            RuleKind::CloseBollinger => "close_x_bollinger",
            RuleKind::CloseKeltner => "close_x_keltner",
            RuleKind::CloseCloud => "close_x_cloud",
            RuleKind::SmaBollinger => "sma_x_bollinger",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    /// Crossover shape, 1 through 4.
    pub fn category(&self) -> u8 {
        use RuleKind::*;
        match self {
            CloseSma | SmaCross | CloseEma | EmaCross | CloseDema | CloseTema | StochKd
            | Vortex => 1,
            RsiLevel | StochLevel => 2,
            RsiBand | StochBand => 3,
            CloseBollinger | CloseKeltner | CloseCloud | SmaBollinger => 4,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        use RuleKind::*;
        match self {
            CloseSma | CloseEma | CloseDema | CloseTema | Vortex => &["window"],
            SmaCross | EmaCross => &["fast", "slow"],
            StochKd => &["k_window", "d_window"],
            RsiLevel => &["window", "threshold"],
            StochLevel => &["k_window", "threshold"],
            RsiBand => &["window", "upper", "lower"],
            StochBand => &["k_window", "upper", "lower"],
            CloseBollinger | CloseKeltner => &["window", "k"],
            CloseCloud => &["tenkan", "kijun", "senkou_b"],
            SmaBollinger => &["sma_window", "bb_window", "k"],
        }
    }

    /// Windows 1..=100, oscillator thresholds 5..=95 in steps of 5, band
    /// multipliers 1.0..=3.0 in steps of 0.5, single-threshold rules at 50.
    /// The three-window cloud rule searches windows in steps of 5.
    pub fn default_grid(&self) -> ParamGrid {
        use RuleKind::*;
        let windows = || ParamGrid::range(1.0, 100.0, 1.0);
        let thresholds = || ParamGrid::range(5.0, 95.0, 5.0);
        let mults = || vec![1.0, 1.5, 2.0, 2.5, 3.0];
        let axes = match self {
            CloseSma | CloseEma | CloseDema | CloseTema | Vortex => vec![windows()],
            SmaCross | EmaCross | StochKd => vec![windows(), windows()],
            RsiLevel | StochLevel => vec![windows(), vec![50.0]],
            RsiBand | StochBand => vec![windows(), thresholds(), thresholds()],
            CloseBollinger => vec![ParamGrid::range(2.0, 100.0, 1.0), mults()],
            CloseKeltner => vec![windows(), mults()],
            CloseCloud => vec![ParamGrid::range(5.0, 100.0, 5.0); 3],
            SmaBollinger => vec![windows(), ParamGrid::range(2.0, 100.0, 1.0), mults()],
        };
        ParamGrid::new(axes)
    }

    /// Checks that `params` is a legal point for this rule, independent of
    /// series length.
    pub fn validate(&self, params: &RuleParams) -> Result<()> {
        use RuleKind::*;
        let names = self.param_names();
        if params.len() != names.len() {
            return Err(self.invalid(format!(
                "expected {} parameters ({}), got {}",
                names.len(),
                names.join(", "),
                params.len()
            )));
        }
        if let Some(v) = params.0.iter().find(|v| !v.is_finite()) {
            return Err(self.invalid(format!("non-finite parameter {v}")));
        }
        let p = &params.0;
        let window = |i: usize, min: f64| -> Result<()> {
            if p[i].fract() != 0.0 || p[i] < min {
                Err(self.invalid(format!(
                    "{} must be an integer >= {min}, got {}",
                    names[i], p[i]
                )))
            } else {
                Ok(())
            }
        };
        let positive = |i: usize| -> Result<()> {
            if p[i] > 0.0 {
                Ok(())
            } else {
                Err(self.invalid(format!("{} must be positive, got {}", names[i], p[i])))
            }
        };
        match self {
            CloseSma | CloseEma | CloseDema | CloseTema | Vortex => window(0, 1.0),
            SmaCross | EmaCross => {
                window(0, 1.0)?;
                window(1, 1.0)?;
                if p[0] < p[1] {
                    Ok(())
                } else {
                    Err(self.invalid("fast window must be shorter than slow window".into()))
                }
            }
            StochKd => {
                window(0, 1.0)?;
                window(1, 1.0)
            }
            RsiLevel | StochLevel => window(0, 1.0),
            RsiBand | StochBand => {
                window(0, 1.0)?;
                if p[1] > p[2] {
                    Ok(())
                } else {
                    Err(self.invalid("upper threshold must exceed lower threshold".into()))
                }
            }
            CloseBollinger => {
                window(0, 2.0)?;
                positive(1)
            }
            CloseKeltner => {
                window(0, 1.0)?;
                positive(1)
            }
            CloseCloud => {
                window(0, 1.0)?;
                window(1, 1.0)?;
                window(2, 1.0)?;
                if p[0] <= p[1] && p[1] <= p[2] {
                    Ok(())
                } else {
                    Err(self.invalid("windows must satisfy tenkan <= kijun <= senkou_b".into()))
                }
            }
            SmaBollinger => {
                window(0, 1.0)?;
                window(1, 2.0)?;
                positive(2)
            }
        }
    }

    fn invalid(&self, reason: String) -> Error {
        Error::InvalidParams {
            rule: self.id().to_string(),
            reason,
        }
    }

    /// Evaluates the rule against the cache's candles.
    pub fn evaluate(
        &self,
        params: &RuleParams,
        cache: &IndicatorCache<'_>,
    ) -> Result<SignalSeries> {
        use RuleKind::*;
        self.validate(params)?;
        let w = |i: usize| params.0[i] as usize;
        let ma = |kind: MaKind, win: usize| -> Result<IndicatorSeries> {
            Ok(cache.get(IndicatorKey::Ma(kind, win))?[0].clone())
        };
        let close = cache.close();
        match self {
            CloseSma => signal_cat1(close, &ma(MaKind::Sma, w(0))?),
            CloseEma => signal_cat1(close, &ma(MaKind::Ema, w(0))?),
            CloseDema => signal_cat1(close, &ma(MaKind::Dema, w(0))?),
            CloseTema => signal_cat1(close, &ma(MaKind::Tema, w(0))?),
            SmaCross => signal_cat1(&ma(MaKind::Sma, w(0))?, &ma(MaKind::Sma, w(1))?),
            EmaCross => signal_cat1(&ma(MaKind::Ema, w(0))?, &ma(MaKind::Ema, w(1))?),
            StochKd => {
                let k = cache.get(IndicatorKey::StochK(w(0)))?;
                let d = smooth(&k[0], w(1), MaKind::Sma)?;
                signal_cat1(&k[0], &d)
            }
            Vortex => {
                let v = cache.get(IndicatorKey::Vortex(w(0)))?;
                signal_cat1(&v[0], &v[1])
            }
            RsiLevel => Ok(signal_cat2(
                &cache.get(IndicatorKey::Rsi(w(0)))?[0],
                params.0[1],
            )),
            StochLevel => Ok(signal_cat2(
                &cache.get(IndicatorKey::StochK(w(0)))?[0],
                params.0[1],
            )),
            RsiBand => signal_cat3(
                &cache.get(IndicatorKey::Rsi(w(0)))?[0],
                params.0[1],
                params.0[2],
            ),
            StochBand => signal_cat3(
                &cache.get(IndicatorKey::StochK(w(0)))?[0],
                params.0[1],
                params.0[2],
            ),
            CloseBollinger => {
                let ms = cache.get(IndicatorKey::MeanStd(w(0)))?;
                let b = bands_from(ms[0].clone(), &ms[1], params.0[1]);
                signal_cat4(close, &b.upper, &b.lower)
            }
            CloseKeltner => {
                let mid = ma(MaKind::Ema, w(0))?;
                let atr = cache.get(IndicatorKey::Atr(w(0)))?;
                let b = bands_from(mid, &atr[0], params.0[1]);
                signal_cat4(close, &b.upper, &b.lower)
            }
            CloseCloud => {
                let t = cache.get(IndicatorKey::Midline(w(0)))?;
                let k = cache.get(IndicatorKey::Midline(w(1)))?;
                let sb = cache.get(IndicatorKey::Midline(w(2)))?;
                let sa = senkou_a(&t[0], &k[0]);
                let (upper, lower) = order_bands(&sa, &sb[0]);
                signal_cat4(close, &upper, &lower)
            }
            SmaBollinger => {
                let fast = ma(MaKind::Sma, w(0))?;
                let ms = cache.get(IndicatorKey::MeanStd(w(1)))?;
                let b = bands_from(ms[0].clone(), &ms[1], params.0[2]);
                signal_cat4(&fast, &b.upper, &b.lower)
            }
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Per-bar `(max, min)` of two lines, defined where both are.
fn order_bands(a: &IndicatorSeries, b: &IndicatorSeries) -> (IndicatorSeries, IndicatorSeries) {
    let n = a.len();
    let start = a.warmup().max(b.warmup()).min(n);
    let (hi, lo): (Vec<f64>, Vec<f64>) = (start..n)
        .map(|t| {
            let (x, y) = (a.get(t).unwrap(), b.get(t).unwrap());
            (x.max(y), x.min(y))
        })
        .unzip();
    (
        IndicatorSeries::with_warmup(n, hi),
        IndicatorSeries::with_warmup(n, lo),
    )
}

/// Positional rule parameters, named by [`RuleKind::param_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct RuleParams(pub Vec<f64>);

impl RuleParams {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lexicographic order on the parameter tuple.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    /// `name=value` pairs joined by `;`, e.g. `fast=5;slow=20`.
    pub fn describe(&self, kind: RuleKind) -> String {
        kind.param_names()
            .iter()
            .zip(&self.0)
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Inverse of [`RuleParams::describe`]; names must match the rule's.
    pub fn parse(kind: RuleKind, text: &str) -> Result<Self> {
        let names = kind.param_names();
        let parts: Vec<&str> = text.split(';').filter(|s| !s.is_empty()).collect();
        if parts.len() != names.len() {
            return Err(kind.invalid(format!("cannot parse parameters `{text}`")));
        }
        let mut values = Vec::with_capacity(parts.len());
        for (part, name) in parts.iter().zip(names) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| kind.invalid(format!("expected name=value, got `{part}`")))?;
            if k.trim() != *name {
                return Err(kind.invalid(format!("expected parameter `{name}`, got `{k}`")));
            }
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| kind.invalid(format!("bad number `{v}`")))?,
            );
        }
        let p = RuleParams(values);
        kind.validate(&p)?;
        Ok(p)
    }
}

/// Cartesian search grid, one sorted axis per rule parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    axes: Vec<Vec<f64>>,
}

impl ParamGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Self {
        let axes = axes
            .into_iter()
            .map(|mut a| {
                a.sort_by(|x, y| x.total_cmp(y));
                a.dedup();
                a
            })
            .collect();
        Self { axes }
    }

    /// Inclusive arithmetic range.
    pub fn range(start: f64, end: f64, step: f64) -> Vec<f64> {
        assert!(step > 0.0, "grid step must be positive");
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Grid points in lexicographic order, keeping only those the rule
    /// accepts.
    pub fn points(&self, kind: RuleKind) -> Vec<RuleParams> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(RuleParams)
            .filter(|p| kind.validate(p).is_ok())
            .collect()
    }
}

/// A catalog entry: a rule and the grid its parameters are searched over.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSpec {
    pub id: String,
    pub kind: RuleKind,
    pub grid: ParamGrid,
}

impl RuleSpec {
    pub fn new(kind: RuleKind) -> Self {
        Self {
            id: kind.id().to_string(),
            kind,
            grid: kind.default_grid(),
        }
    }

    pub fn with_grid(kind: RuleKind, grid: ParamGrid) -> Result<Self> {
        let names = kind.param_names();
        if grid.axes().len() != names.len() || names.len() > MAX_PARAMS {
            return Err(kind.invalid(format!(
                "grid has {} axes, rule takes {} parameters",
                grid.axes().len(),
                names.len()
            )));
        }
        let spec = Self {
            id: kind.id().to_string(),
            kind,
            grid,
        };
        spec.points()?;
        Ok(spec)
    }

    pub fn category(&self) -> u8 {
        self.kind.category()
    }

    /// Valid grid points; empty grids are an error.
    pub fn points(&self) -> Result<Vec<RuleParams>> {
        let pts = self.grid.points(self.kind);
        if pts.is_empty() {
            return Err(Error::EmptyGrid(self.id.clone()));
        }
        Ok(pts)
    }

    pub fn evaluate(&self, candles: &CandleSeries, params: &RuleParams) -> Result<SignalSeries> {
        self.kind.evaluate(params, &IndicatorCache::new(candles))
    }
}

/// The sixteen rules with their default grids, in feature-column order.
pub fn default_catalog() -> Vec<RuleSpec> {
    RuleKind::ALL.into_iter().map(RuleSpec::new).collect()
}

/// Column `i` is rule `i` evaluated with `params[i]`.
pub fn build_features(
    candles: &CandleSeries,
    catalog: &[RuleSpec],
    params: &[RuleParams],
) -> Result<SignalMatrix> {
    if catalog.len() != CATALOG_SIZE {
        return Err(Error::InvalidConfig(format!(
            "catalog must hold {CATALOG_SIZE} rules, got {}",
            catalog.len()
        )));
    }
    if params.len() != catalog.len() {
        return Err(Error::LengthMismatch {
            left: catalog.len(),
            right: params.len(),
        });
    }
    let cache = IndicatorCache::new(candles);
    let columns = catalog
        .par_iter()
        .zip(params.par_iter())
        .map(|(rule, p)| rule.kind.evaluate(p, &cache))
        .collect::<Result<Vec<_>>>()?;
    SignalMatrix::new(catalog.iter().map(|r| r.id.clone()).collect(), columns)
}
