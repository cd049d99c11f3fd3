//! OHLC candle ingestion, validation, chronological splitting, and seeded
//! synthetic series for desk-scale experiments.
//!
//! The on-disk format is a headed CSV, `timestamp,open,high,low,close`, with
//! integer UTC epoch seconds and decimal prices. Files written by
//! [`write_csv`] are canonical: loading and re-writing them is byte-identical.

use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "timestamp,open,high,low,close";

const SECONDS_PER_DAY: i64 = 86_400;

/// One OHLC bar. `timestamp` is the bar's UTC epoch second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candle {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    pub fn new(timestamp: i64, open: f64, high: f64, low: f64, close: f64) -> Self {
        Self {
            timestamp,
            open,
            high,
            low,
            close,
        }
    }

    /// Checks price positivity and the high/low envelope.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("{name} must be a positive finite price, got {v}"));
            }
        }
        if self.low > self.open.min(self.close) {
            return Err(format!(
                "low {} above min(open, close) {}",
                self.low,
                self.open.min(self.close)
            ));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!(
                "high {} below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        Ok(())
    }
}

/// An ordered, validated run of candles for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct CandleSeries {
    pair: String,
    bar_interval: i64,
    bars: Vec<Candle>,
}

impl CandleSeries {
    /// Builds a series, validating every bar and timestamp ordering.
    ///
    /// The bar interval is inferred as the smallest spacing between
    /// consecutive bars (0 for a single bar).
    pub fn new(pair: impl Into<String>, bars: Vec<Candle>) -> Result<Self> {
        for (i, bar) in bars.iter().enumerate() {
            let line = i as u64 + 1;
            bar.validate()
                .map_err(|reason| Error::InvariantViolation { line, reason })?;
            if i > 0 && bar.timestamp <= bars[i - 1].timestamp {
                return Err(Error::NonMonotonicTimestamp { line });
            }
        }
        let bar_interval = infer_interval(&bars);
        Ok(Self {
            pair: pair.into(),
            bar_interval,
            bars,
        })
    }

    fn from_validated(pair: String, bars: Vec<Candle>, bar_interval: i64) -> Self {
        Self {
            pair,
            bar_interval,
            bars,
        }
    }

    pub fn pair(&self) -> &str {
        &self.pair
    }

    pub fn bar_interval(&self) -> i64 {
        self.bar_interval
    }

    pub fn bars(&self) -> &[Candle] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|c| c.close).collect()
    }

    pub fn highs(&self) -> Vec<f64> {
        self.bars.iter().map(|c| c.high).collect()
    }

    pub fn lows(&self) -> Vec<f64> {
        self.bars.iter().map(|c| c.low).collect()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.bars.iter().map(|c| c.timestamp).collect()
    }

    /// The first `n` bars, keeping pair and interval.
    pub fn prefix(&self, n: usize) -> CandleSeries {
        let n = n.min(self.bars.len());
        Self::from_validated(
            self.pair.clone(),
            self.bars[..n].to_vec(),
            self.bar_interval,
        )
    }

    /// Bars `start..`, keeping pair and interval.
    pub fn suffix(&self, start: usize) -> CandleSeries {
        let start = start.min(self.bars.len());
        Self::from_validated(
            self.pair.clone(),
            self.bars[start..].to_vec(),
            self.bar_interval,
        )
    }

    /// Classifies every consecutive spacing against the bar interval.
    pub fn gap_stats(&self) -> GapStats {
        let mut stats = GapStats::default();
        let interval = self.bar_interval;
        for w in self.bars.windows(2) {
            let delta = w[1].timestamp - w[0].timestamp;
            if delta == interval {
                stats.regular += 1;
            } else if delta > 2 * interval {
                stats.session_gaps += 1;
                stats.largest_gap = stats.largest_gap.max(delta);
            } else {
                stats.irregular += 1;
            }
        }
        stats
    }
}

fn infer_interval(bars: &[Candle]) -> i64 {
    bars.windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .min()
        .unwrap_or(0)
}

/// Spacing summary. Gaps longer than twice the interval count as session
/// gaps (weekend closes); spacings between one and two intervals are
/// reported as irregular but tolerated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GapStats {
    pub regular: usize,
    pub session_gaps: usize,
    pub irregular: usize,
    pub largest_gap: i64,
}

/// Reads a candle CSV from disk.
pub fn load_csv(path: impl AsRef<Path>, pair: &str) -> Result<CandleSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_csv(file, pair)
}

/// Parses candle CSV from any reader. Line numbers in errors are 1-based
/// and count the header as line 1.
pub fn read_csv<R: Read>(reader: R, pair: &str) -> Result<CandleSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(Error::MalformedRow {
                line: 1,
                reason: "empty file, expected header".into(),
            })
        }
        Some(rec) => rec.map_err(|e| csv_error(e, 1))?,
    };
    let header_cols: Vec<&str> = header.iter().collect();
    if header_cols.join(",") != CSV_HEADER {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("expected header `{CSV_HEADER}`"),
        });
    }

    let mut bars: Vec<Candle> = Vec::new();
    for (i, rec) in records.enumerate() {
        let fallback_line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_error(e, fallback_line))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(fallback_line);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != 5 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        let timestamp: i64 = parse_field(&rec[0], "timestamp", line)?;
        let open: f64 = parse_field(&rec[1], "open", line)?;
        let high: f64 = parse_field(&rec[2], "high", line)?;
        let low: f64 = parse_field(&rec[3], "low", line)?;
        let close: f64 = parse_field(&rec[4], "close", line)?;
        let candle = Candle::new(timestamp, open, high, low, close);
        candle
            .validate()
            .map_err(|reason| Error::InvariantViolation { line, reason })?;
        if let Some(prev) = bars.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::NonMonotonicTimestamp { line });
            }
        }
        bars.push(candle);
    }
    if bars.is_empty() {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    let interval = infer_interval(&bars);
    Ok(CandleSeries::from_validated(
        pair.to_string(),
        bars,
        interval,
    ))
}

fn csv_error(e: csv::Error, line: u64) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(line);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::MalformedRow {
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn parse_field<T: FromStr>(raw: &str, name: &str, line: u64) -> Result<T> {
    raw.parse::<T>().map_err(|_| Error::MalformedRow {
        line,
        reason: format!("cannot parse {name} from `{raw}`"),
    })
}

/// Writes the canonical CSV form of a series.
pub fn write_csv<W: Write>(series: &CandleSeries, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for c in &series.bars {
        writeln!(
            out,
            "{},{},{},{},{}",
            c.timestamp, c.open, c.high, c.low, c.close
        )?;
    }
    Ok(())
}

pub fn save_csv(series: &CandleSeries, path: impl AsRef<Path>) -> io::Result<()> {
    let file = File::create(path)?;
    let mut w = io::BufWriter::new(file);
    write_csv(series, &mut w)?;
    w.flush()
}

/// Fraction of bars assigned to the training segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    train_fraction: f64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidSplit(train_fraction));
        }
        Ok(Self { train_fraction })
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    /// Number of training bars for a series of `n` bars.
    pub fn train_len(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).floor() as usize
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
        }
    }
}

/// Chronological split: the first `floor(fraction * N)` bars train, the
/// rest test. Both segments must be nonempty.
pub fn split(series: &CandleSeries, spec: SplitSpec) -> Result<(CandleSeries, CandleSeries)> {
    let n = series.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: n });
    }
    let k = spec.train_len(n);
    if k == 0 || k == n {
        return Err(Error::SeriesTooShort {
            needed: (1.0 / spec.train_fraction.min(1.0 - spec.train_fraction)).ceil() as usize,
            got: n,
        });
    }
    Ok((series.prefix(k), series.suffix(k)))
}

/// Price-process family for [`synthesize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    TrendUp,
    TrendDown,
    MeanRevert,
    RandomWalk,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::TrendUp,
        Regime::TrendDown,
        Regime::MeanRevert,
        Regime::RandomWalk,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::TrendUp => "trend-up",
            Regime::TrendDown => "trend-down",
            Regime::MeanRevert => "mean-revert",
            Regime::RandomWalk => "random-walk",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown regime `{s}`")))
    }
}

/// Parameters of the synthetic generator. Drift and volatility are per bar,
/// in log-price units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub regime: Regime,
    pub drift: f64,
    pub volatility: f64,
    /// Pull toward the starting log price per bar (mean-revert only).
    pub reversion: f64,
    pub start_price: f64,
    pub start_timestamp: i64,
    pub bar_interval: i64,
    /// Skip the Friday 22:00 to Sunday 22:00 UTC window like the FX market.
    pub weekend_gaps: bool,
}

impl SynthConfig {
    pub fn for_regime(regime: Regime) -> Self {
        let drift = match regime {
            Regime::TrendUp => 5e-5,
            Regime::TrendDown => -5e-5,
            Regime::MeanRevert | Regime::RandomWalk => 0.0,
        };
        Self {
            regime,
            drift,
            volatility: 5e-4,
            reversion: 0.02,
            start_price: 1.2,
            // 2018-01-01T00:00:00Z, a Monday.
            start_timestamp: 1_514_764_800,
            bar_interval: 300,
            weekend_gaps: true,
        }
    }
}

fn market_closed(ts: i64) -> bool {
    let days = ts.div_euclid(SECONDS_PER_DAY);
    // 1970-01-01 was a Thursday; shift so Monday is 0.
    let weekday = (days + 3).rem_euclid(7);
    let week_second = weekday * SECONDS_PER_DAY + ts.rem_euclid(SECONDS_PER_DAY);
    let close = 4 * SECONDS_PER_DAY + 22 * 3600;
    let reopen = 6 * SECONDS_PER_DAY + 22 * 3600;
    (close..reopen).contains(&week_second)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Deterministic synthetic candles with the default parameters of `regime`.
pub fn synthesize(seed: u64, n: usize, regime: Regime) -> Result<CandleSeries> {
    synthesize_with(seed, n, &SynthConfig::for_regime(regime))
}

/// Geometric random walk on the close. Open is the previous close, and
/// high/low extend the open-close body by a half-normal wick. Prices are
/// rounded to 6 decimals so the series survives a CSV round trip exactly.
pub fn synthesize_with(seed: u64, n: usize, cfg: &SynthConfig) -> Result<CandleSeries> {
    if n == 0 {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    if cfg.bar_interval <= 0
        || cfg.start_price.is_nan()
        || cfg.start_price <= 0.0
        || cfg.volatility.is_nan()
        || cfg.volatility < 0.0
    {
        return Err(Error::InvalidConfig(
            "synthetic series needs a positive interval, start price and volatility".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor = cfg.start_price.ln();
    let mut log_close = anchor;
    let mut prev_close = round6(cfg.start_price);
    let mut ts = cfg.start_timestamp;
    let mut bars = Vec::with_capacity(n);

    for _ in 0..n {
        while cfg.weekend_gaps && market_closed(ts) {
            ts += cfg.bar_interval;
        }
        let shock: f64 = rng.sample(StandardNormal);
        let step = match cfg.regime {
            Regime::MeanRevert => cfg.reversion * (anchor - log_close),
            _ => cfg.drift,
        };
        log_close += step + cfg.volatility * shock;

        let open = prev_close;
        let close = round6(log_close.exp()).max(1e-6);
        let wick_hi: f64 = rng.sample::<f64, _>(StandardNormal).abs() * cfg.volatility * 0.5;
        let wick_lo: f64 = rng.sample::<f64, _>(StandardNormal).abs() * cfg.volatility * 0.5;
        let high = round6(open.max(close) * wick_hi.exp());
        let low = round6(open.min(close) * (-wick_lo).exp()).max(1e-6);

        bars.push(Candle::new(ts, open, high, low.min(open.min(close)), close));
        prev_close = close;
        ts += cfg.bar_interval;
    }
    Ok(CandleSeries::from_validated(
        format!("SYN-{}", cfg.regime),
        bars,
        cfg.bar_interval,
    ))
}
