use std::io::{self, Write};

use rayon::prelude::*;

use crate::data::CandleSeries;
use crate::error::Result;
use crate::metrics::{log_returns, ssr, strategy_returns, PositionSeries, ReturnSeries};
use crate::rules::{IndicatorCache, RuleKind, RuleParams, RuleSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rule_id: String,
    pub kind: RuleKind,
    pub best_params: RuleParams,
    pub best_score: f64,
    /// Every grid point with its SSR, in lexicographic parameter order.
    pub all_scores: Vec<(RuleParams, f64)>,
}

/// Scores every grid point by the SSR of the rule's raw signal used as the
/// position. Ties go to the lexicographically smallest parameter tuple.
pub fn grid_search_rule(rule: &RuleSpec, candles: &CandleSeries) -> Result<GridResult> {
    let returns = log_returns(candles)?;
    search(rule, &IndicatorCache::new(candles), &returns)
}

fn search(
    rule: &RuleSpec,
    cache: &IndicatorCache<'_>,
    returns: &ReturnSeries,
) -> Result<GridResult> {
    let points = rule.points()?;
    let scores = points
        .par_iter()
        .map(|p| {
            let signal = rule.kind.evaluate(p, cache)?;
            ssr(&strategy_returns(
                &PositionSeries::from_signal(&signal),
                returns,
            )?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(GridResult {
        rule_id: rule.id.clone(),
        kind: rule.kind,
        best_params: points[best].clone(),
        best_score: scores[best],
        all_scores: points.into_iter().zip(scores).collect(),
    })
}

/// Grid-searches each rule independently; results follow catalog order.
pub fn optimize_catalog(catalog: &[RuleSpec], candles: &CandleSeries) -> Result<Vec<GridResult>> {
    let returns = log_returns(candles)?;
    catalog
        .iter()
        .map(|rule| search(rule, &IndicatorCache::new(candles), &returns))
        .collect()
}

/// `rule_id,best_params,best_score,grid_points`
pub fn write_grid_results_csv<W: Write>(results: &[GridResult], mut out: W) -> io::Result<()> {
    writeln!(out, "rule_id,best_params,best_score,grid_points")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{}",
            r.rule_id,
            r.best_params.describe(r.kind),
            r.best_score,
            r.all_scores.len()
        )?;
    }
    Ok(())
}
