#![allow(dead_code)]

use proptest::prelude::*;
use rulefx::data::{Candle, CandleSeries};
use rulefx::rules::{default_catalog, ParamGrid, RuleSpec};

/// Default catalog with long axes thinned to multiples of five (plus 2).
pub fn reduced_catalog() -> Vec<RuleSpec> {
    default_catalog()
        .into_iter()
        .map(|r| {
            let axes = r
                .grid
                .axes()
                .iter()
                .map(|a| {
                    if a.len() > 20 {
                        a.iter()
                            .copied()
                            .filter(|v| *v == 2.0 || (*v as i64) % 5 == 0)
                            .collect()
                    } else {
                        a.clone()
                    }
                })
                .collect();
            RuleSpec::with_grid(r.kind, ParamGrid::new(axes)).unwrap()
        })
        .collect()
}

pub fn candles_from(start: f64, steps: &[(f64, f64, f64)]) -> CandleSeries {
    let mut bars = Vec::with_capacity(steps.len());
    let mut prev = start;
    for (i, &(r, up, dn)) in steps.iter().enumerate() {
        let open = prev;
        let close = open * r.exp();
        bars.push(Candle::new(
            1_514_764_800 + 300 * i as i64,
            open,
            open.max(close) * (1.0 + up),
            open.min(close) * (1.0 - dn),
            close,
        ));
        prev = close;
    }
    CandleSeries::new("PROP", bars).unwrap()
}

/// Random OHLC paths with occasional flat bars, `len` bars long.
pub fn arb_candles(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = CandleSeries> {
    let step = (
        prop_oneof![1 => Just(0.0), 6 => -0.01f64..0.01],
        prop_oneof![1 => Just(0.0), 3 => 0.0f64..0.004],
        prop_oneof![1 => Just(0.0), 3 => 0.0f64..0.004],
    );
    (0.5f64..2.0, prop::collection::vec(step, len)).prop_map(|(s, steps)| candles_from(s, &steps))
}
