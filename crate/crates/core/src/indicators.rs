//! Trend, momentum and volatility indicators over candle series.
//!
//! Every indicator is causal: the value at bar `t` reads only bars `..=t`.
//! Outputs keep the length of their input, with a leading warm-up run of
//! undefined values. Window sums are evaluated directly per window rather
//! than with a running total, which keeps results independent of how much
//! history precedes the window.

use std::collections::VecDeque;
use std::io::{self, Write};

use crate::data::CandleSeries;
use crate::error::{Error, Result};

/// A time-aligned indicator. The first `warmup` entries are undefined and
/// every later entry is a finite real.
#[derive(Debug, Clone)]
pub struct IndicatorSeries {
    warmup: usize,
    // Full-length storage; entries before `warmup` are NaN placeholders.
    values: Vec<f64>,
}

impl IndicatorSeries {
    /// A fully defined series.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { warmup: 0, values }
    }

    /// Builds a series of `len` entries whose last `defined.len()` entries
    /// are `defined`.
    pub fn with_warmup(len: usize, defined: Vec<f64>) -> Self {
        assert!(defined.len() <= len, "defined tail longer than series");
        let warmup = len - defined.len();
        let mut values = vec![f64::NAN; warmup];
        values.extend(defined);
        Self { warmup, values }
    }

    /// Builds a series from optional values; undefined entries must form a
    /// prefix.
    pub fn from_options(values: &[Option<f64>]) -> Result<Self> {
        let warmup = values.iter().take_while(|v| v.is_none()).count();
        let mut out = Vec::with_capacity(values.len());
        for (i, v) in values.iter().enumerate() {
            match v {
                Some(x) if i >= warmup && x.is_finite() => out.push(*x),
                None if i < warmup => out.push(f64::NAN),
                _ => {
                    return Err(Error::InvalidParams {
                        rule: "indicator".into(),
                        reason: format!("undefined or non-finite value at index {i} after warm-up"),
                    })
                }
            }
        }
        Ok(Self {
            warmup,
            values: out,
        })
    }

    pub fn undefined(len: usize) -> Self {
        Self::with_warmup(len, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<f64> {
        if i < self.warmup {
            None
        } else {
            self.values.get(i).copied()
        }
    }

    /// The defined tail, starting at index `warmup`.
    pub fn defined(&self) -> &[f64] {
        &self.values[self.warmup..]
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn to_options(&self) -> Vec<Option<f64>> {
        self.iter().collect()
    }

    fn map_defined(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        Self::with_warmup(self.len(), f(self.defined()))
    }
}

impl PartialEq for IndicatorSeries {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.warmup == other.warmup
            && self.defined() == other.defined()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaKind {
    Sma,
    Ema,
    Dema,
    Tema,
}

/// Upper, middle and lower lines of a channel indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub upper: IndicatorSeries,
    pub middle: IndicatorSeries,
    pub lower: IndicatorSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ichimoku {
    pub tenkan_sen: IndicatorSeries,
    pub kijun_sen: IndicatorSeries,
    pub senkou_a: IndicatorSeries,
    pub senkou_b: IndicatorSeries,
}

fn check_window(indicator: &'static str, window: usize, min: usize, len: usize) -> Result<()> {
    if window < min {
        return Err(Error::InvalidWindow { indicator, window });
    }
    if window > len {
        return Err(Error::WindowExceedsSeries { window, len });
    }
    Ok(())
}

fn check_multiplier(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMultiplier(k))
    }
}

fn sma_kernel(x: &[f64], w: usize) -> Vec<f64> {
    if w == 0 || w > x.len() {
        return Vec::new();
    }
    x.windows(w)
        .map(|win| win.iter().sum::<f64>() / w as f64)
        .collect()
}

fn ema_kernel(x: &[f64], w: usize) -> Vec<f64> {
    if w == 0 || w > x.len() {
        return Vec::new();
    }
    let alpha = 2.0 / (w as f64 + 1.0);
    let seed = x[..w].iter().sum::<f64>() / w as f64;
    let mut out = Vec::with_capacity(x.len() - w + 1);
    out.push(seed);
    let mut prev = seed;
    for &v in &x[w..] {
        prev = alpha * v + (1.0 - alpha) * prev;
        out.push(prev);
    }
    out
}

fn ma_kernel(x: &[f64], w: usize, kind: MaKind) -> Vec<f64> {
    match kind {
        MaKind::Sma => sma_kernel(x, w),
        MaKind::Ema => ema_kernel(x, w),
        MaKind::Dema => {
            let e1 = ema_kernel(x, w);
            let e2 = ema_kernel(&e1, w);
            let off = e1.len() - e2.len().min(e1.len());
            e2.iter()
                .enumerate()
                .map(|(i, &b)| 2.0 * e1[off + i] - b)
                .collect()
        }
        MaKind::Tema => {
            let e1 = ema_kernel(x, w);
            let e2 = ema_kernel(&e1, w);
            let e3 = ema_kernel(&e2, w);
            let o1 = e1.len() - e3.len().min(e1.len());
            let o2 = e2.len() - e3.len().min(e2.len());
            e3.iter()
                .enumerate()
                .map(|(i, &c)| 3.0 * e1[o1 + i] - 3.0 * e2[o2 + i] + c)
                .collect()
        }
    }
}

/// SMA, EMA (alpha = 2/(w+1), seeded with the SMA of the first window),
/// DEMA `2E - E(E)` and TEMA `3E - 3E(E) + E(E(E))`.
pub fn moving_average(series: &[f64], window: usize, kind: MaKind) -> Result<IndicatorSeries> {
    check_window("moving average", window, 1, series.len())?;
    Ok(IndicatorSeries::with_warmup(
        series.len(),
        ma_kernel(series, window, kind),
    ))
}

/// Moving average over the defined part of another indicator.
pub fn smooth(series: &IndicatorSeries, window: usize, kind: MaKind) -> Result<IndicatorSeries> {
    check_window("moving average", window, 1, series.len())?;
    Ok(series.map_defined(|x| ma_kernel(x, window, kind)))
}

/// Wilder RSI. Averages seed with the simple mean of the first `window`
/// changes and then smooth by `1/window`. A window with neither gains nor
/// losses reads 50.
pub fn rsi(series: &[f64], window: usize) -> Result<IndicatorSeries> {
    check_window("rsi", window, 1, series.len())?;
    let n = series.len();
    if window >= n {
        return Ok(IndicatorSeries::undefined(n));
    }
    let w = window as f64;
    let change = |t: usize| series[t] - series[t - 1];
    let (mut gain, mut loss) = (1..=window).fold((0.0, 0.0), |(g, l), t| {
        let d = change(t);
        (g + d.max(0.0), l + (-d).max(0.0))
    });
    gain /= w;
    loss /= w;
    let mut out = Vec::with_capacity(n - window);
    out.push(rsi_value(gain, loss));
    for t in window + 1..n {
        let d = change(t);
        gain = (gain * (w - 1.0) + d.max(0.0)) / w;
        loss = (loss * (w - 1.0) + (-d).max(0.0)) / w;
        out.push(rsi_value(gain, loss));
    }
    Ok(IndicatorSeries::with_warmup(n, out))
}

fn rsi_value(gain: f64, loss: f64) -> f64 {
    if loss == 0.0 {
        if gain == 0.0 {
            50.0
        } else {
            100.0
        }
    } else {
        100.0 - 100.0 / (1.0 + gain / loss)
    }
}

/// Rolling extremum over windows of `w` ending at each index, using a
/// monotone deque. Output has `x.len() - w + 1` entries.
fn rolling_extreme(x: &[f64], w: usize, want_max: bool) -> Vec<f64> {
    if w == 0 || w > x.len() {
        return Vec::new();
    }
    let better = |a: f64, b: f64| if want_max { a >= b } else { a <= b };
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(w);
    let mut out = Vec::with_capacity(x.len() - w + 1);
    for (i, &v) in x.iter().enumerate() {
        while let Some(&back) = dq.back() {
            if better(v, x[back]) {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(i);
        if dq[0] + w <= i {
            dq.pop_front();
        }
        if i + 1 >= w {
            out.push(x[dq[0]]);
        }
    }
    out
}

/// Stochastic oscillator. %K is the close's position in the rolling
/// high/low range (50 on a flat range); %D is the SMA of %K.
pub fn stochastic(
    candles: &CandleSeries,
    k_window: usize,
    d_window: usize,
) -> Result<(IndicatorSeries, IndicatorSeries)> {
    let n = candles.len();
    check_window("stochastic %K", k_window, 1, n)?;
    check_window("stochastic %D", d_window, 1, n)?;
    let k = stochastic_k(candles, k_window);
    let d = k.map_defined(|x| sma_kernel(x, d_window));
    Ok((k, d))
}

pub(crate) fn stochastic_k(candles: &CandleSeries, k_window: usize) -> IndicatorSeries {
    let hh = rolling_extreme(&candles.highs(), k_window, true);
    let ll = rolling_extreme(&candles.lows(), k_window, false);
    let bars = candles.bars();
    let off = k_window - 1;
    let k = hh
        .iter()
        .zip(&ll)
        .enumerate()
        .map(|(i, (&h, &l))| {
            let range = h - l;
            if range > 0.0 {
                (100.0 * (bars[off + i].close - l) / range).clamp(0.0, 100.0)
            } else {
                50.0
            }
        })
        .collect();
    IndicatorSeries::with_warmup(candles.len(), k)
}

/// Rolling mean and population standard deviation over `window` bars.
pub fn rolling_mean_std(
    series: &[f64],
    window: usize,
) -> Result<(IndicatorSeries, IndicatorSeries)> {
    check_window("rolling std", window, 1, series.len())?;
    let n = series.len();
    let (mean, sd): (Vec<f64>, Vec<f64>) = series
        .windows(window)
        .map(|win| {
            let m = win.iter().sum::<f64>() / window as f64;
            let var = win.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / window as f64;
            (m, var.sqrt())
        })
        .unzip();
    Ok((
        IndicatorSeries::with_warmup(n, mean),
        IndicatorSeries::with_warmup(n, sd),
    ))
}

/// Bollinger bands: SMA middle, plus and minus `k` population standard
/// deviations over the same window.
pub fn bollinger(series: &[f64], window: usize, k: f64) -> Result<Bands> {
    check_window("bollinger", window, 2, series.len())?;
    check_multiplier(k)?;
    let (middle, sd) = rolling_mean_std(series, window)?;
    Ok(bands_from(middle, &sd, k))
}

/// `middle ± k·width`, aligned on the middle line's warm-up.
pub(crate) fn bands_from(middle: IndicatorSeries, width: &IndicatorSeries, k: f64) -> Bands {
    debug_assert_eq!(middle.warmup(), width.warmup());
    let n = middle.len();
    let m = middle.defined();
    let w = width.defined();
    let upper = m.iter().zip(w).map(|(m, a)| m + k * a).collect();
    let lower = m.iter().zip(w).map(|(m, a)| m - k * a).collect();
    Bands {
        upper: IndicatorSeries::with_warmup(n, upper),
        lower: IndicatorSeries::with_warmup(n, lower),
        middle,
    }
}

fn true_range(candles: &CandleSeries) -> Vec<f64> {
    let bars = candles.bars();
    bars.iter()
        .enumerate()
        .map(|(t, c)| match t {
            0 => c.high - c.low,
            _ => {
                let pc = bars[t - 1].close;
                c.high.max(pc) - c.low.min(pc)
            }
        })
        .collect()
}

/// Vortex indicator. Needs the previous bar, so the first defined value is
/// at index `window`.
pub fn vortex(candles: &CandleSeries, window: usize) -> Result<(IndicatorSeries, IndicatorSeries)> {
    let n = candles.len();
    check_window("vortex", window, 1, n)?;
    if window >= n {
        return Ok((IndicatorSeries::undefined(n), IndicatorSeries::undefined(n)));
    }
    let bars = candles.bars();
    let tr = true_range(candles);
    let mut plus = Vec::with_capacity(n - window);
    let mut minus = Vec::with_capacity(n - window);
    for t in window..n {
        let (mut vp, mut vm, mut trs) = (0.0, 0.0, 0.0);
        for s in t + 1 - window..=t {
            vp += (bars[s].high - bars[s - 1].low).abs();
            vm += (bars[s].low - bars[s - 1].high).abs();
            trs += tr[s];
        }
        if trs > 0.0 {
            plus.push(vp / trs);
            minus.push(vm / trs);
        } else {
            plus.push(1.0);
            minus.push(1.0);
        }
    }
    Ok((
        IndicatorSeries::with_warmup(n, plus),
        IndicatorSeries::with_warmup(n, minus),
    ))
}

/// Wilder average true range. The first bar's range is `high - low`; the
/// seed is the mean of the first `window` true ranges.
pub fn atr(candles: &CandleSeries, window: usize) -> Result<IndicatorSeries> {
    check_window("atr", window, 1, candles.len())?;
    let tr = true_range(candles);
    let w = window as f64;
    let mut prev = tr[..window].iter().sum::<f64>() / w;
    let mut out = Vec::with_capacity(tr.len() - window + 1);
    out.push(prev);
    for &x in &tr[window..] {
        prev = (prev * (w - 1.0) + x) / w;
        out.push(prev);
    }
    Ok(IndicatorSeries::with_warmup(candles.len(), out))
}

/// Keltner channel: EMA of the close, plus and minus `k` ATRs.
pub fn keltner(candles: &CandleSeries, window: usize, k: f64) -> Result<Bands> {
    check_window("keltner", window, 1, candles.len())?;
    check_multiplier(k)?;
    let middle = moving_average(&candles.closes(), window, MaKind::Ema)?;
    let range = atr(candles, window)?;
    Ok(bands_from(middle, &range, k))
}

/// Rolling `(highest high + lowest low) / 2`.
pub fn midpoint(candles: &CandleSeries, window: usize) -> Result<IndicatorSeries> {
    check_window("midpoint", window, 1, candles.len())?;
    Ok(midpoint_line(candles, window))
}

fn midpoint_line(candles: &CandleSeries, window: usize) -> IndicatorSeries {
    let hh = rolling_extreme(&candles.highs(), window, true);
    let ll = rolling_extreme(&candles.lows(), window, false);
    let mid = hh.iter().zip(&ll).map(|(h, l)| (h + l) / 2.0).collect();
    IndicatorSeries::with_warmup(candles.len(), mid)
}

/// Ichimoku lines without the customary forward displacement of the
/// senkou spans, so every value at `t` uses only bars up to `t`.
pub fn ichimoku(
    candles: &CandleSeries,
    tenkan: usize,
    kijun: usize,
    senkou_b: usize,
) -> Result<Ichimoku> {
    if tenkan == 0 || tenkan > kijun || kijun > senkou_b {
        return Err(Error::InvalidWindowOrder {
            tenkan,
            kijun,
            senkou_b,
        });
    }
    check_window("ichimoku", senkou_b, 1, candles.len())?;
    let tenkan_sen = midpoint_line(candles, tenkan);
    let kijun_sen = midpoint_line(candles, kijun);
    let senkou_b_line = midpoint_line(candles, senkou_b);
    Ok(Ichimoku {
        senkou_a: senkou_a(&tenkan_sen, &kijun_sen),
        tenkan_sen,
        kijun_sen,
        senkou_b: senkou_b_line,
    })
}

pub(crate) fn senkou_a(
    tenkan_sen: &IndicatorSeries,
    kijun_sen: &IndicatorSeries,
) -> IndicatorSeries {
    let off = kijun_sen.warmup() - tenkan_sen.warmup();
    let a = kijun_sen
        .defined()
        .iter()
        .enumerate()
        .map(|(i, &k)| (tenkan_sen.defined()[off + i] + k) / 2.0)
        .collect();
    IndicatorSeries::with_warmup(kijun_sen.len(), a)
}

/// Writes `timestamp` plus one column per indicator; undefined cells are
/// left empty.
pub fn write_indicator_csv<W: Write>(
    timestamps: &[i64],
    columns: &[(&str, &IndicatorSeries)],
    mut out: W,
) -> io::Result<()> {
    write!(out, "timestamp")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (t, ts) in timestamps.iter().enumerate() {
        write!(out, "{ts}")?;
        for (_, col) in columns {
            match col.get(t) {
                Some(v) => write!(out, ",{v}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
