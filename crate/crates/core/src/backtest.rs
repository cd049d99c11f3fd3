//! Zero-fee simulation of benchmark and GA-weighted strategies on held-out
//! candles.

use std::fmt;
use std::io::{self, Write};

use crate::data::CandleSeries;
use crate::error::{Error, Result};
use crate::metrics::{log_returns, EquityCurve, PerformanceReport, PositionSeries};
use crate::optimize::{Chromosome, FitnessKind, Normalizer};
use crate::rules::{build_features, RuleParams, RuleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    BuyHold,
    SellHold,
    GaMr,
    GaMssr,
    FixedWeights,
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::BuyHold => "B&H",
            StrategyKind::SellHold => "S&H",
            StrategyKind::GaMr => "GA-MR",
            StrategyKind::GaMssr => "GA-MSSR",
            StrategyKind::FixedWeights => "fixed",
        }
    }

    /// Lowercase name safe for file names.
    pub fn slug(&self) -> &'static str {
        match self {
            StrategyKind::BuyHold => "bh",
            StrategyKind::SellHold => "sh",
            StrategyKind::GaMr => "ga_mr",
            StrategyKind::GaMssr => "ga_mssr",
            StrategyKind::FixedWeights => "fixed",
        }
    }

    pub fn for_fitness(kind: FitnessKind) -> Self {
        match kind {
            FitnessKind::Mr => StrategyKind::GaMr,
            FitnessKind::Mssr => StrategyKind::GaMssr,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Everything a weighted strategy needs at test time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub catalog: Vec<RuleSpec>,
    pub params: Vec<RuleParams>,
    pub chromosome: Chromosome,
    pub normalizer: Normalizer,
}

impl TrainedModel {
    /// Positions on `candles`, with indicators warmed up from the first bar
    /// of `candles` and the training-time divisor.
    pub fn positions(&self, candles: &CandleSeries) -> Result<PositionSeries> {
        let features = build_features(candles, &self.catalog, &self.params)?;
        self.normalizer.apply(&self.chromosome, &features)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub model: Option<TrainedModel>,
    pub leverage: f64,
    /// The run fails once the balance falls to or below this level.
    pub blowout_balance: f64,
}

impl StrategySpec {
    pub fn buy_hold() -> Self {
        Self::benchmark(StrategyKind::BuyHold)
    }

    pub fn sell_hold() -> Self {
        Self::benchmark(StrategyKind::SellHold)
    }

    fn benchmark(kind: StrategyKind) -> Self {
        Self {
            kind,
            model: None,
            leverage: 1.0,
            blowout_balance: 0.0,
        }
    }

    pub fn weighted(kind: StrategyKind, model: TrainedModel) -> Self {
        Self {
            kind,
            model: Some(model),
            leverage: 1.0,
            blowout_balance: 0.0,
        }
    }

    pub fn with_leverage(mut self, leverage: f64) -> Self {
        self.leverage = leverage;
        self
    }

    pub fn with_blowout(mut self, balance: f64) -> Self {
        self.blowout_balance = balance;
        self
    }

    pub fn positions(&self, candles: &CandleSeries) -> Result<PositionSeries> {
        match (self.kind, &self.model) {
            (StrategyKind::BuyHold, _) => PositionSeries::constant(candles.len(), 1.0),
            (StrategyKind::SellHold, _) => PositionSeries::constant(candles.len(), -1.0),
            (_, Some(model)) => model.positions(candles),
            (kind, None) => Err(Error::InvalidConfig(format!(
                "strategy {kind} requires a trained model"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub kind: StrategyKind,
    pub report: PerformanceReport,
    pub equity: EquityCurve,
    pub positions: PositionSeries,
}

pub fn run(strategy: &StrategySpec, candles: &CandleSeries) -> Result<BacktestResult> {
    let returns = log_returns(candles)?;
    let positions = strategy.positions(candles)?;
    let equity = EquityCurve::from_positions(
        &candles.timestamps(),
        &positions,
        &returns,
        strategy.leverage,
    )?;
    if let Some((index, &balance)) = equity
        .balance()
        .iter()
        .enumerate()
        .find(|(_, b)| **b <= strategy.blowout_balance)
    {
        return Err(Error::AccountBlown { index, balance });
    }
    Ok(BacktestResult {
        kind: strategy.kind,
        report: PerformanceReport::compute(&equity, &positions),
        equity,
        positions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    pub leverage: f64,
    pub report: PerformanceReport,
}

/// One row per strategy, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "strategy,leverage")?;
        for f in PerformanceReport::CSV_FIELDS {
            write!(out, ",{f}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{},{}", row.strategy.label(), row.leverage)?;
            for v in row.report.csv_values() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Aligned columns: strategy, ROI, SR, MD, AP, SSR.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "{:<10} {:>8} {:>12} {:>10} {:>10} {:>9} {:>14}",
            "strategy", "leverage", "ROI %", "SR", "MD %", "AP %", "SSR"
        )?;
        for row in &self.rows {
            let r = &row.report;
            writeln!(
                out,
                "{:<10} {:>8} {:>12} {:>10.4} {:>10.4} {:>9.2} {:>14.4}",
                row.strategy.label(),
                row.leverage,
                percent(r.roi),
                r.sharpe,
                r.max_drawdown * 100.0,
                r.avg_position * 100.0,
                r.ssr
            )?;
        }
        Ok(())
    }
}

/// Four decimals, switching to scientific notation once the figure would
/// overflow its column.
fn percent(x: f64) -> String {
    let p = x * 100.0;
    if p.abs() < 1e7 {
        format!("{p:.4}")
    } else {
        format!("{p:.4e}")
    }
}

/// Runs every strategy and keeps the full results alongside the table.
pub fn compare_detailed(
    strategies: &[StrategySpec],
    candles: &CandleSeries,
) -> Result<(ComparisonTable, Vec<BacktestResult>)> {
    if strategies.is_empty() {
        return Err(Error::InvalidConfig("no strategies to compare".into()));
    }
    let results = strategies
        .iter()
        .map(|s| run(s, candles))
        .collect::<Result<Vec<_>>>()?;
    let rows = strategies
        .iter()
        .zip(&results)
        .map(|(s, r)| ComparisonRow {
            strategy: s.kind,
            leverage: s.leverage,
            report: r.report.clone(),
        })
        .collect();
    Ok((ComparisonTable { rows }, results))
}

pub fn compare(strategies: &[StrategySpec], candles: &CandleSeries) -> Result<ComparisonTable> {
    Ok(compare_detailed(strategies, candles)?.0)
}
