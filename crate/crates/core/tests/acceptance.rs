//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulefx::backtest::{compare, run, StrategyKind, StrategySpec, TrainedModel};
use rulefx::data::{load_csv, split, synthesize, CandleSeries, Regime, SplitSpec};
use rulefx::indicators::{
    bollinger, ichimoku, keltner, moving_average, rsi, stochastic, vortex, IndicatorSeries, MaKind,
};
use rulefx::metrics::{
    average_position, log_returns, max_drawdown, roi, roi_from_ratio, sharpe_from_daily, ssr_of,
    EquityCurve, PerformanceReport, PositionSeries,
};
use rulefx::optimize::{
    ga_evolve, grid_search_rule, positions_from_weights, Chromosome, FitnessContext, FitnessKind,
    GaConfig, Normalizer,
};
use rulefx::pipeline::{evaluate, train, write_evaluations, FITNESS_KINDS};
use rulefx::rules::{
    build_features, default_catalog, IndicatorCache, ParamGrid, RuleKind, RuleParams, RuleSpec,
    Signal, SignalMatrix, SignalSeries,
};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(
        elapsed < limit,
        format!("took {elapsed:.2?}, limit {limit:?}"),
    )
}

fn fixture() -> CandleSeries {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/trend_up.csv");
    load_csv(p, "FIXTURE-UP").expect("fixture loads")
}

// 1 -------------------------------------------------------------------------

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact rational evaluation of sum / (sigma * |negative sum|) with the same
/// epsilon floors, rounded once at the end.
fn ssr_exact(p: &[f64]) -> f64 {
    let xs: Vec<BigRational> = p.iter().map(|&x| rational(x)).collect();
    let n = BigRational::from_integer(BigInt::from(xs.len()));
    let sum = xs.iter().fold(BigRational::zero(), |a, b| a + b);
    if sum.is_zero() {
        return 0.0;
    }
    let mean = &sum / &n;
    let var = xs
        .iter()
        .map(|x| (x - &mean) * (x - &mean))
        .fold(BigRational::zero(), |a, b| a + b)
        / &n;
    let neg = xs
        .iter()
        .filter(|x| x.is_negative())
        .fold(BigRational::zero(), |a, b| a + b)
        .abs();
    let eps = rational(1e-12);
    let var = if var < &eps * &eps { &eps * &eps } else { var };
    let neg = if neg < eps { eps } else { neg };
    let squared = (&sum * &sum) / (var * &neg * &neg);
    let magnitude = squared.to_f64().expect("representable").sqrt();
    if sum.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let len = rng.random_range(1..=20);
        let p: Vec<f64> = match case % 10 {
            0 => vec![0.0; len],
            1 => vec![rng.random_range(0.0..0.01); len],
            2 => (0..len).map(|_| rng.random_range(0.0..0.02)).collect(),
            _ => (0..len).map(|_| rng.random_range(-0.02..0.02)).collect(),
        };
        let got = ssr_of(&p);
        let want = ssr_exact(&p);
        let rel = if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        };
        worst = worst.max(rel);
        ensure(rel <= 1e-9, format!("case {case}: {got} vs {want}"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("50 series, worst relative error {worst:.1e}"))
}

// 2 -------------------------------------------------------------------------

fn naive_sma(x: &[f64], w: usize) -> Vec<Option<f64>> {
    (0..x.len())
        .map(|t| (t + 1 >= w).then(|| x[t + 1 - w..=t].iter().sum::<f64>() / w as f64))
        .collect()
}

fn naive_ssr(p: &[f64]) -> f64 {
    let n = p.len() as f64;
    let sum: f64 = p.iter().sum();
    let mean = sum / n;
    let sd = (p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let neg: f64 = -p.iter().filter(|x| **x < 0.0).sum::<f64>();
    sum / sd.max(1e-12) / neg.max(1e-12)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let s = synthesize(2, 2_000, Regime::TrendUp).map_err(|e| e.to_string())?;
    let fast = ParamGrid::range(2.0, 20.0, 1.0);
    let slow = ParamGrid::range(5.0, 100.0, 5.0);
    let spec = RuleSpec::with_grid(
        RuleKind::SmaCross,
        ParamGrid::new(vec![fast.clone(), slow.clone()]),
    )
    .map_err(|e| e.to_string())?;
    let result = grid_search_rule(&spec, &s).map_err(|e| e.to_string())?;

    let closes = s.closes();
    let r: Vec<f64> = closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut points = 0;
    for &f in &fast {
        for &sl in &slow {
            if f >= sl {
                continue;
            }
            points += 1;
            let a = naive_sma(&closes, f as usize);
            let b = naive_sma(&closes, sl as usize);
            let mut state = 0.0;
            let signal: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| {
                    state = match (x, y) {
                        (Some(x), Some(y)) if x > y => 1.0,
                        (Some(x), Some(y)) if x < y => -1.0,
                        (Some(_), Some(_)) => state,
                        _ => 0.0,
                    };
                    state
                })
                .collect();
            let p: Vec<f64> = (0..r.len()).map(|t| signal[t] * r[t]).collect();
            let score = naive_ssr(&p);
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, vec![f, sl]));
            }
        }
    }
    let (score, params) = best.ok_or("empty sweep")?;
    ensure(points <= 400, format!("{points} grid points"))?;
    ensure(
        result.best_params.values() == params.as_slice(),
        format!("grid {:?} vs sweep {:?}", result.best_params, params),
    )?;
    ensure(
        ((result.best_score - score) / score).abs() < 1e-9,
        format!("score {} vs {}", result.best_score, score),
    )?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{points} points, argmax {}",
        result.best_params.describe(RuleKind::SmaCross)
    ))
}

// 3 -------------------------------------------------------------------------

fn planted_matrix(
    s: &CandleSeries,
    column: usize,
) -> (SignalMatrix, rulefx::metrics::ReturnSeries) {
    let r = log_returns(s).unwrap();
    let catalog = default_catalog();
    let params: Vec<RuleParams> = catalog
        .iter()
        .map(|c| {
            let p = c.points().unwrap();
            p[p.len() / 2].clone()
        })
        .collect();
    let m = build_features(s, &catalog, &params).unwrap();
    let rv = r.values();
    let oracle: Vec<Signal> = (0..rv.len())
        .map(|t| match rv.get(t + 1) {
            Some(x) if *x > 0.0 => Signal::Long,
            Some(x) if *x < 0.0 => Signal::Short,
            _ => Signal::Neutral,
        })
        .collect();
    let mut cols = m.columns().to_vec();
    cols[column] = SignalSeries::new(oracle);
    (SignalMatrix::new(m.rule_ids().to_vec(), cols).unwrap(), r)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let s = synthesize(2024, 5_000, Regime::RandomWalk).map_err(|e| e.to_string())?;
    let column = 7;
    let (m, r) = planted_matrix(&s, column);
    let ctx = FitnessContext::new(&m, &r, FitnessKind::Mr).map_err(|e| e.to_string())?;
    let one_hot = ctx
        .evaluate(&Chromosome::one_hot(m.n_columns(), column))
        .map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for seed in 0..5 {
        let cfg = GaConfig {
            seed,
            fitness: FitnessKind::Mr,
            ..GaConfig::default()
        };
        ensure(
            (cfg.population_size, cfg.parents_mating, cfg.generations) == (10, 4, 200)
                && (cfg.mutation_prob, cfg.crossover_prob) == (0.5, 0.4),
            "defaults drifted",
        )?;
        let (best, trace) = ga_evolve(&m, &r, &cfg).map_err(|e| e.to_string())?;
        let fit = ctx.evaluate(&best).map_err(|e| e.to_string())?;
        ensure(
            trace.is_non_decreasing(),
            format!("seed {seed}: trace decreases"),
        )?;
        ensure(
            fit >= 0.95 * one_hot,
            format!("seed {seed}: fitness {fit} < 0.95 * {one_hot}"),
        )?;
        ratios.push(fit / one_hot);
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    let text: Vec<String> = ratios.iter().map(|x| format!("{x:.3}")).collect();
    Ok(format!("fitness / one-hot = [{}]", text.join(", ")))
}

// 4 -------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    let mut series = vec![fixture()];
    for (i, regime) in Regime::ALL.into_iter().enumerate() {
        series.push(synthesize(40 + i as u64, 3_000, regime).map_err(|e| e.to_string())?);
    }
    for s in &series {
        let t = compare(&[StrategySpec::buy_hold(), StrategySpec::sell_hold()], s)
            .map_err(|e| e.to_string())?;
        let (bh, sh) = (&t.rows[0].report, &t.rows[1].report);
        ensure(
            sh.total_log_return == -bh.total_log_return,
            format!(
                "{}: {} vs {}",
                s.pair(),
                sh.total_log_return,
                bh.total_log_return
            ),
        )?;
        ensure(bh.avg_position == 1.0 && sh.avg_position == 1.0, "AP != 1")?;
    }
    Ok(format!("{} series, exact negation, AP = 1", series.len()))
}

// 5 -------------------------------------------------------------------------

fn in_unit_range(s: &IndicatorSeries) -> bool {
    s.defined().iter().all(|v| (0.0..=100.0).contains(v))
}

fn ordered(lower: &IndicatorSeries, middle: &IndicatorSeries, upper: &IndicatorSeries) -> bool {
    (0..middle.len()).all(|t| match (lower.get(t), middle.get(t), upper.get(t)) {
        (Some(l), Some(m), Some(u)) => l <= m && m <= u,
        (None, None, None) => true,
        _ => false,
    })
}

fn criterion_5() -> Outcome {
    let catalog = default_catalog();
    let points: Vec<Vec<RuleParams>> = catalog.iter().map(|r| r.points().unwrap()).collect();
    let mut runner = TestRunner::new(Config {
        cases: 1_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        common::arb_candles(120..=260),
        prop::collection::vec(any::<prop::sample::Index>(), 16),
        prop::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], 16),
        1usize..=60,
        prop_oneof![Just(1.0), 0.5f64..3.0],
    );
    runner
        .run(&strategy, |(s, picks, weights, w, k)| {
            let params: Vec<RuleParams> = picks
                .iter()
                .zip(&points)
                .map(|(i, p)| i.get(p).clone())
                .collect();
            let m = build_features(&s, &catalog, &params).unwrap();
            for col in m.columns() {
                prop_assert!(col.values().iter().all(|v| (-1..=1).contains(&v.value())));
            }
            let closes = s.closes();
            prop_assert!(in_unit_range(&rsi(&closes, w).unwrap()));
            let (sk, sd) = stochastic(&s, w, 1 + w % 5).unwrap();
            prop_assert!(in_unit_range(&sk) && in_unit_range(&sd));
            let b = bollinger(&closes, w.max(2), k).unwrap();
            prop_assert!(ordered(&b.lower, &b.middle, &b.upper));
            let kc = keltner(&s, w, k).unwrap();
            prop_assert!(ordered(&kc.lower, &kc.middle, &kc.upper));

            let chromosome = Chromosome::new(weights).unwrap();
            let v = positions_from_weights(&chromosome, &m).unwrap();
            prop_assert!(v.max_abs() <= 1.0);
            // A halved divisor forces the clip on out-of-sample style inputs.
            let fitted = Normalizer::fit(&chromosome, &m).unwrap();
            let normalizer = Normalizer {
                divisor: fitted.divisor / 2.0,
            };
            let model = TrainedModel {
                catalog: catalog.clone(),
                params: params.clone(),
                chromosome: chromosome.clone(),
                normalizer,
            };
            for spec in [
                StrategySpec::buy_hold(),
                StrategySpec::sell_hold(),
                StrategySpec::weighted(StrategyKind::FixedWeights, model),
            ] {
                let res = run(&spec, &s).unwrap();
                prop_assert!(res.positions.max_abs() <= 1.0);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 random inputs".into())
}

// 6 -------------------------------------------------------------------------

type Indicator = Box<dyn Fn(&CandleSeries) -> Vec<IndicatorSeries>>;

fn indicator_suite() -> Vec<(&'static str, Indicator)> {
    let c = |s: &CandleSeries| s.closes();
    vec![
        (
            "sma",
            Box::new(move |s: &CandleSeries| vec![moving_average(&c(s), 9, MaKind::Sma).unwrap()])
                as Indicator,
        ),
        (
            "ema",
            Box::new(move |s: &CandleSeries| vec![moving_average(&c(s), 9, MaKind::Ema).unwrap()]),
        ),
        (
            "dema",
            Box::new(move |s: &CandleSeries| vec![moving_average(&c(s), 7, MaKind::Dema).unwrap()]),
        ),
        (
            "tema",
            Box::new(move |s: &CandleSeries| vec![moving_average(&c(s), 5, MaKind::Tema).unwrap()]),
        ),
        (
            "rsi",
            Box::new(move |s: &CandleSeries| vec![rsi(&c(s), 14).unwrap()]),
        ),
        (
            "stochastic",
            Box::new(|s: &CandleSeries| {
                let (k, d) = stochastic(s, 14, 3).unwrap();
                vec![k, d]
            }),
        ),
        (
            "bollinger",
            Box::new(move |s: &CandleSeries| {
                let b = bollinger(&c(s), 20, 2.0).unwrap();
                vec![b.upper, b.middle, b.lower]
            }),
        ),
        (
            "vortex",
            Box::new(|s: &CandleSeries| {
                let (p, m) = vortex(s, 14).unwrap();
                vec![p, m]
            }),
        ),
        (
            "keltner",
            Box::new(|s: &CandleSeries| {
                let b = keltner(s, 20, 1.5).unwrap();
                vec![b.upper, b.middle, b.lower]
            }),
        ),
        (
            "ichimoku",
            Box::new(|s: &CandleSeries| {
                let i = ichimoku(s, 9, 26, 52).unwrap();
                vec![i.tenkan_sen, i.kijun_sen, i.senkou_a, i.senkou_b]
            }),
        ),
    ]
}

fn prefix_agrees(full: &IndicatorSeries, part: &IndicatorSeries) -> bool {
    part.len() <= full.len() && (0..part.len()).all(|t| part.get(t) == full.get(t))
}

fn criterion_6() -> Outcome {
    let suite = indicator_suite();
    let catalog = default_catalog();
    let points: Vec<Vec<RuleParams>> = catalog.iter().map(|r| r.points().unwrap()).collect();
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        common::arb_candles(150..=240),
        prop::collection::vec(any::<prop::sample::Index>(), 16),
        prop::collection::vec(105usize..150, 3),
    );
    runner
        .run(&strategy, |(s, picks, cuts)| {
            for &cut in &cuts {
                let part = s.prefix(cut);
                for (name, f) in &suite {
                    for (a, b) in f(&s).iter().zip(f(&part)) {
                        prop_assert!(prefix_agrees(a, &b), "{} at cut {}", name, cut);
                    }
                }
                let full_cache = IndicatorCache::new(&s);
                let part_cache = IndicatorCache::new(&part);
                for ((rule, pts), pick) in catalog.iter().zip(&points).zip(&picks) {
                    let p = pick.get(pts);
                    let a = rule.kind.evaluate(p, &full_cache).unwrap();
                    let b = rule.kind.evaluate(p, &part_cache).unwrap();
                    prop_assert_eq!(
                        &a.values()[..cut],
                        b.values(),
                        "{} at cut {}",
                        &rule.id,
                        cut
                    );
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} indicators, {} rules, 200 series x 3 cuts",
        suite.len(),
        catalog.len()
    ))
}

// 7 -------------------------------------------------------------------------

fn pipeline_once(dir: &Path) -> std::result::Result<(), String> {
    let s = synthesize(77, 3_000, Regime::TrendUp).map_err(|e| e.to_string())?;
    let (train_s, test_s) = split(&s, SplitSpec::default()).map_err(|e| e.to_string())?;
    let catalog = common::reduced_catalog();
    let ga = GaConfig {
        seed: 42,
        ..GaConfig::default()
    };
    let t = train(&train_s, &catalog, &ga).map_err(|e| e.to_string())?;
    t.write(dir).map_err(|e| e.to_string())?;
    let models: Vec<(FitnessKind, TrainedModel)> = FITNESS_KINDS
        .iter()
        .map(|&k| {
            (
                k,
                rulefx::pipeline::load_model(dir, k, &catalog).expect("artifacts load"),
            )
        })
        .collect();
    let evs = evaluate(&test_s, &models, &[1.0, 20.0]).map_err(|e| e.to_string())?;
    write_evaluations(dir, &evs).map_err(|e| e.to_string())?;
    Ok(())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

fn criterion_7() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline_once(a.path())?;
    pipeline_once(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(
        fa.len() == fb.len() && fa.len() >= 10,
        "artifact sets differ",
    )?;
    for (x, y) in fa.iter().zip(&fb) {
        ensure(x.file_name() == y.file_name(), "artifact names differ")?;
        let (bx, by) = (std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        ensure(bx == by, format!("{} differs", x.display()))?;
    }
    for required in [
        "grid_results.csv",
        "chromosome_mr.txt",
        "chromosome_mssr.txt",
        "report_L1.csv",
    ] {
        ensure(
            a.path().join(required).exists(),
            format!("{required} missing"),
        )?;
    }
    Ok(format!("{} artifacts byte-identical", fa.len()))
}

// 8 -------------------------------------------------------------------------

/// Equal up to floating-point rounding of the final operation.
fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

fn criterion_8() -> Outcome {
    let day = 86_400;
    let curve = |b: Vec<f64>| {
        let ts: Vec<i64> = (0..b.len() as i64).map(|i| i * day).collect();
        EquityCurve::from_balances(&ts, b, 1.0).unwrap()
    };
    let c = curve(vec![1.0, 1.1]);
    ensure(same(roi(&c, 365) + 1.0, 1.10), "roi 1.1 over 365 days")?;
    ensure(
        same(roi_from_ratio(1.1, 182.5) + 1.0, 1.21),
        "roi 1.1 over 182.5 days",
    )?;
    ensure(roi(&curve(vec![1.0, 1.0]), 90) == 0.0, "roi flat")?;

    ensure(
        matches!(
            sharpe_from_daily(&[0.01; 5]),
            Err(rulefx::Error::ZeroVolatility)
        ),
        "sharpe zero volatility",
    )?;
    ensure(
        matches!(sharpe_from_daily(&[0.01, -0.01]), Ok(x) if x == 0.0),
        "sharpe zero sum",
    )?;
    let sd = (2.0f64 / 3.0).sqrt() / 100.0;
    ensure(
        same(sharpe_from_daily(&[0.02, 0.0, 0.01]).unwrap(), 0.03 / sd),
        "sharpe [0.02, 0, 0.01]",
    )?;

    ensure(
        same(max_drawdown(&curve(vec![1.0, 0.99, 1.01, 0.98])), -0.02),
        "md -2%",
    )?;
    ensure(
        max_drawdown(&curve(vec![1.0, 1.01, 1.02])) == 0.0,
        "md rising",
    )?;
    let small = curve(vec![1.0, 0.9997, 1.0]);
    let rep = PerformanceReport::compute(&small, &PositionSeries::constant(3, 1.0).unwrap());
    ensure(
        rep.to_string().contains("MD -0.0300%"),
        format!("md granularity: {rep}"),
    )?;

    ensure(
        average_position(&PositionSeries::constant(9, 1.0).unwrap()) == 1.0,
        "ap 1",
    )?;
    ensure(
        average_position(&PositionSeries::constant(9, 0.0).unwrap()) == 0.0,
        "ap 0",
    )?;
    ensure(
        average_position(&PositionSeries::new(vec![1.0, 0.0, -1.0, 0.0]).unwrap()) == 0.5,
        "ap 0.5",
    )?;

    let s = fixture();
    let r = log_returns(&s).unwrap();
    let sig = RuleKind::SmaCross
        .evaluate(&RuleParams::new(vec![10.0, 40.0]), &IndicatorCache::new(&s))
        .unwrap();
    let v = PositionSeries::from_signal(&sig);
    let ts = s.timestamps();
    let c1 = EquityCurve::from_positions(&ts, &v, &r, 1.0).unwrap();
    let c20 = EquityCurve::from_positions(&ts, &v, &r, 20.0).unwrap();
    ensure(
        c1.log_increments()
            .iter()
            .zip(c20.log_increments())
            .all(|(a, b)| *b == 20.0 * a),
        "leverage 20 increments",
    )?;
    Ok("roi, sharpe, md, ap examples; leverage x20 exact".into())
}

// 9 -------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let s = fixture();
    let (train_s, test_s) = split(&s, SplitSpec::default()).map_err(|e| e.to_string())?;
    let catalog = common::reduced_catalog();
    let ga = GaConfig {
        seed: 7,
        ..GaConfig::default()
    };
    let t = train(&train_s, &catalog, &ga).map_err(|e| e.to_string())?;
    let models: Vec<_> = FITNESS_KINDS
        .iter()
        .map(|&k| (k, t.model(k, &catalog).unwrap()))
        .collect();
    let ev = evaluate(&test_s, &models, &[1.0]).map_err(|e| e.to_string())?;
    let rows = &ev[0].table.rows;
    let find = |k: StrategyKind| &rows.iter().find(|r| r.strategy == k).unwrap().report;
    let (mr, mssr) = (find(StrategyKind::GaMr), find(StrategyKind::GaMssr));
    ensure(
        mssr.avg_position < mr.avg_position,
        format!("AP mssr {} >= mr {}", mssr.avg_position, mr.avg_position),
    )?;
    ensure(
        mssr.max_drawdown >= mr.max_drawdown,
        format!("MD mssr {} < mr {}", mssr.max_drawdown, mr.max_drawdown),
    )?;
    Ok(format!(
        "AP {:.4} < {:.4}, MD {:.4}% >= {:.4}%",
        mssr.avg_position,
        mr.avg_position,
        mssr.max_drawdown * 100.0,
        mr.max_drawdown * 100.0
    ))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("ssr matches exact rational oracle", criterion_1),
        ("grid search equals brute force", criterion_2),
        ("ga reaches planted one-hot fitness", criterion_3),
        ("sell-hold negates buy-hold", criterion_4),
        ("constraint suite", criterion_5),
        ("causality suite", criterion_6),
        ("pipeline determinism", criterion_7),
        ("metric formulas and leverage", criterion_8),
        ("ga-mssr vs ga-mr pattern", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.2}s) {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
