//! Python bindings for the rulefx pipeline.
//!
//! ```python
//! import rulefx
//! candles = rulefx.Candles.synthetic(seed=0, bars=3000, regime="trend-up")
//! train, test = candles.split(0.5)
//! model = rulefx.train(train, seed=7)
//! for row in model.backtest(test, leverage=[1.0, 20.0]):
//!     print(row["strategy"], row["roi"], row["avg_position"])
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyFileNotFoundError, PyKeyError, PyValueError};
use pyo3::prelude::*;

use rulefx::data::{self, Candle, CandleSeries, Regime, SplitSpec};
use rulefx::indicators::{self, IndicatorSeries, MaKind};
use rulefx::metrics::{self, PositionSeries, ReturnSeries};
use rulefx::optimize::{self, Chromosome, FitnessKind, GaConfig, MutationSchedule};
use rulefx::pipeline::{self, Training};
use rulefx::rules::{self, ParamGrid, RuleKind, RuleParams, RuleSpec, SignalMatrix, SignalSeries};
use rulefx::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::MissingFile(_) | Error::MissingArtifacts(_) => {
            PyFileNotFoundError::new_err(e.to_string())
        }
        Error::NonFinite(_)
        | Error::ZeroVolatility
        | Error::TooFewDays(_)
        | Error::AccountBlown { .. }
        | Error::PositionOutOfRange { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Indicator values with `None` during warmup.
type Column = Vec<Option<f64>>;

fn options(s: &IndicatorSeries) -> Column {
    s.to_options()
}

fn rule_kind(id: &str) -> PyResult<RuleKind> {
    RuleKind::from_id(id).ok_or_else(|| PyKeyError::new_err(format!("unknown rule `{id}`")))
}

/// Validated OHLC bars for one pair.
#[pyclass(name = "Candles", frozen)]
struct PyCandles {
    inner: CandleSeries,
}

#[pymethods]
impl PyCandles {
    #[new]
    #[pyo3(signature = (timestamps, open, high, low, close, pair="PAIR"))]
    fn new(
        timestamps: Vec<i64>,
        open: Vec<f64>,
        high: Vec<f64>,
        low: Vec<f64>,
        close: Vec<f64>,
        pair: &str,
    ) -> PyResult<Self> {
        let n = timestamps.len();
        if [open.len(), high.len(), low.len(), close.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(PyValueError::new_err(
                "all columns must have the same length",
            ));
        }
        let bars = (0..n)
            .map(|i| Candle::new(timestamps[i], open[i], high[i], low[i], close[i]))
            .collect();
        CandleSeries::new(pair, bars)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (path, pair=None))]
    fn from_csv(path: PathBuf, pair: Option<&str>) -> PyResult<Self> {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        data::load_csv(&path, pair.unwrap_or(&stem))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Regimes: "trend-up", "trend-down", "mean-revert", "random-walk".
    #[staticmethod]
    #[pyo3(signature = (seed, bars, regime="random-walk"))]
    fn synthetic(seed: u64, bars: usize, regime: &str) -> PyResult<Self> {
        let regime: Regime = regime.parse().map_err(to_py)?;
        data::synthesize(seed, bars, regime)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        data::save_csv(&self.inner, path).map_err(|e| to_py(e.into()))
    }

    #[getter]
    fn pair(&self) -> &str {
        self.inner.pair()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Candles(pair={:?}, bars={})",
            self.inner.pair(),
            self.inner.len()
        )
    }

    fn timestamps(&self) -> Vec<i64> {
        self.inner.timestamps()
    }

    fn closes(&self) -> Vec<f64> {
        self.inner.closes()
    }

    fn split(&self, train_fraction: f64) -> PyResult<(Self, Self)> {
        let spec = SplitSpec::new(train_fraction).map_err(to_py)?;
        let (a, b) = data::split(&self.inner, spec).map_err(to_py)?;
        Ok((Self { inner: a }, Self { inner: b }))
    }

    fn gap_stats(&self) -> BTreeMap<&'static str, i64> {
        let g = self.inner.gap_stats();
        BTreeMap::from([
            ("regular", g.regular as i64),
            ("session_gaps", g.session_gaps as i64),
            ("irregular", g.irregular as i64),
            ("largest_gap", g.largest_gap),
        ])
    }

    fn log_returns(&self) -> PyResult<Vec<f64>> {
        metrics::log_returns(&self.inner)
            .map(|r| r.values().to_vec())
            .map_err(to_py)
    }
}

/// Moving average of `values`; kind is "sma", "ema", "dema" or "tema".
#[pyfunction]
#[pyo3(signature = (values, window, kind="sma"))]
fn moving_average(values: Vec<f64>, window: usize, kind: &str) -> PyResult<Column> {
    let kind = match kind {
        "sma" => MaKind::Sma,
        "ema" => MaKind::Ema,
        "dema" => MaKind::Dema,
        "tema" => MaKind::Tema,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown moving average `{kind}`"
            )))
        }
    };
    indicators::moving_average(&values, window, kind)
        .map(|s| options(&s))
        .map_err(to_py)
}

#[pyfunction]
fn rsi(values: Vec<f64>, window: usize) -> PyResult<Column> {
    indicators::rsi(&values, window)
        .map(|s| options(&s))
        .map_err(to_py)
}

/// `(upper, middle, lower)`.
#[pyfunction]
fn bollinger(values: Vec<f64>, window: usize, k: f64) -> PyResult<(Column, Column, Column)> {
    let b = indicators::bollinger(&values, window, k).map_err(to_py)?;
    Ok((options(&b.upper), options(&b.middle), options(&b.lower)))
}

/// `(%K, %D)`.
#[pyfunction]
fn stochastic(candles: &PyCandles, k_window: usize, d_window: usize) -> PyResult<(Column, Column)> {
    let (k, d) = indicators::stochastic(&candles.inner, k_window, d_window).map_err(to_py)?;
    Ok((options(&k), options(&d)))
}

/// SSR of realized per-period strategy returns.
#[pyfunction]
fn ssr(periods: Vec<f64>) -> PyResult<f64> {
    if let Some(i) = periods.iter().position(|x| !x.is_finite()) {
        return Err(to_py(Error::NonFinite(i)));
    }
    Ok(metrics::ssr_of(&periods))
}

#[pyfunction]
fn rule_ids() -> Vec<&'static str> {
    RuleKind::ALL.iter().map(|k| k.id()).collect()
}

/// Parameter names of a catalog rule, in grid order.
#[pyfunction]
fn rule_params(rule_id: &str) -> PyResult<Vec<&'static str>> {
    Ok(rule_kind(rule_id)?.param_names().to_vec())
}

/// Signal in {-1, 0, 1} per bar.
#[pyfunction]
fn evaluate_rule(candles: &PyCandles, rule_id: &str, params: Vec<f64>) -> PyResult<Vec<i8>> {
    let kind = rule_kind(rule_id)?;
    RuleSpec::new(kind)
        .evaluate(&candles.inner, &RuleParams::new(params))
        .map(|s| s.values().iter().map(|v| v.value()).collect())
        .map_err(to_py)
}

fn spec_for(rule_id: &str, grid: Option<Vec<Vec<f64>>>) -> PyResult<RuleSpec> {
    let kind = rule_kind(rule_id)?;
    match grid {
        Some(axes) => RuleSpec::with_grid(kind, ParamGrid::new(axes)).map_err(to_py),
        None => Ok(RuleSpec::new(kind)),
    }
}

/// Best `(params, ssr)` over the rule's grid; `grid` replaces the default axes.
#[pyfunction]
#[pyo3(signature = (candles, rule_id, grid=None))]
fn grid_search(
    candles: &PyCandles,
    rule_id: &str,
    grid: Option<Vec<Vec<f64>>>,
) -> PyResult<(Vec<f64>, f64)> {
    let spec = spec_for(rule_id, grid)?;
    let r = optimize::grid_search_rule(&spec, &candles.inner).map_err(to_py)?;
    Ok((r.best_params.values().to_vec(), r.best_score))
}

fn fitness_kind(name: &str) -> PyResult<FitnessKind> {
    name.parse().map_err(to_py)
}

#[allow(clippy::too_many_arguments)]
fn ga_config(
    seed: u64,
    fitness: &str,
    generations: usize,
    population_size: usize,
    parents_mating: usize,
    mutation_prob: f64,
    crossover_prob: f64,
    mutation_step: f64,
    schedule: &str,
) -> PyResult<GaConfig> {
    let cfg = GaConfig {
        population_size,
        parents_mating,
        generations,
        mutation_prob,
        crossover_prob,
        mutation_step,
        mutation_schedule: schedule.parse::<MutationSchedule>().map_err(to_py)?,
        seed,
        fitness: fitness_kind(fitness)?,
        ..GaConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Evolves rule weights over signal `columns` (each a list of -1/0/1, one
/// per bar) against per-bar log `returns`. Returns `(weights, best_fitness
/// per generation)`.
#[pyfunction]
#[pyo3(signature = (
    columns, returns, fitness="mssr", seed=0, generations=200, population_size=10,
    parents_mating=4, mutation_prob=0.5, crossover_prob=0.4, mutation_step=0.2,
    schedule="linear",
))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    columns: Vec<Vec<i8>>,
    returns: Vec<f64>,
    fitness: &str,
    seed: u64,
    generations: usize,
    population_size: usize,
    parents_mating: usize,
    mutation_prob: f64,
    crossover_prob: f64,
    mutation_step: f64,
    schedule: &str,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cfg = ga_config(
        seed,
        fitness,
        generations,
        population_size,
        parents_mating,
        mutation_prob,
        crossover_prob,
        mutation_step,
        schedule,
    )?;
    let cols = columns
        .iter()
        .map(|c| SignalSeries::from_i8(c))
        .collect::<rulefx::Result<Vec<_>>>()
        .map_err(to_py)?;
    let ids = (0..cols.len()).map(|i| format!("c{i}")).collect();
    let m = SignalMatrix::new(ids, cols).map_err(to_py)?;
    let r = ReturnSeries::new(returns).map_err(to_py)?;
    let (best, trace) = optimize::ga_evolve(&m, &r, &cfg).map_err(to_py)?;
    Ok((best.weights, trace.best_fitness()))
}

/// Performance of explicit positions in [-1, 1] over `candles`.
#[pyfunction]
#[pyo3(signature = (candles, positions, leverage=1.0))]
fn backtest(
    candles: &PyCandles,
    positions: Vec<f64>,
    leverage: f64,
) -> PyResult<BTreeMap<String, f64>> {
    let v = PositionSeries::new(positions).map_err(to_py)?;
    let r = metrics::log_returns(&candles.inner).map_err(to_py)?;
    let curve = metrics::EquityCurve::from_positions(&candles.inner.timestamps(), &v, &r, leverage)
        .map_err(to_py)?;
    Ok(report_dict(&metrics::PerformanceReport::compute(
        &curve, &v,
    )))
}

fn report_dict(r: &metrics::PerformanceReport) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("roi".to_string(), r.roi),
        ("sharpe".to_string(), r.sharpe),
        ("max_drawdown".to_string(), r.max_drawdown),
        ("avg_position".to_string(), r.avg_position),
        ("ssr".to_string(), r.ssr),
        ("total_log_return".to_string(), r.total_log_return),
        ("trading_days".to_string(), r.trading_days as f64),
    ])
}

/// Grid-optimized catalog plus GA-MR and GA-MSSR chromosomes.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    catalog: Vec<RuleSpec>,
    training: Training,
}

#[pymethods]
impl PyModel {
    /// Best parameters per rule id.
    fn params(&self) -> BTreeMap<String, Vec<f64>> {
        self.training
            .grid
            .iter()
            .map(|g| (g.rule_id.clone(), g.best_params.values().to_vec()))
            .collect()
    }

    /// Chromosome weights for "mr" or "mssr".
    fn weights(&self, fitness: &str) -> PyResult<Vec<f64>> {
        let kind = fitness_kind(fitness)?;
        let run = self.training.run(kind).expect("both kinds are trained");
        Ok(run.saved.chromosome.weights.clone())
    }

    fn trace(&self, fitness: &str) -> PyResult<Vec<f64>> {
        let kind = fitness_kind(fitness)?;
        Ok(self
            .training
            .run(kind)
            .expect("both kinds are trained")
            .trace
            .best_fitness())
    }

    /// Writes the optimization artifacts into `dir`.
    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.training.write(&dir).map_err(to_py)
    }

    /// One dict per strategy (B&H, S&H, GA-MR, GA-MSSR) and leverage.
    #[pyo3(signature = (candles, leverage=vec![1.0]))]
    fn backtest(
        &self,
        candles: &PyCandles,
        leverage: Vec<f64>,
    ) -> PyResult<Vec<HashMap<String, Py<PyAny>>>> {
        let models: Vec<_> = pipeline::FITNESS_KINDS
            .iter()
            .map(|&k| {
                (
                    k,
                    self.training
                        .model(k, &self.catalog)
                        .expect("both kinds are trained"),
                )
            })
            .collect();
        let evs = pipeline::evaluate(&candles.inner, &models, &leverage).map_err(to_py)?;
        Python::attach(|py| {
            let mut rows = Vec::new();
            for ev in &evs {
                for row in &ev.table.rows {
                    let mut d: HashMap<String, Py<PyAny>> = report_dict(&row.report)
                        .into_iter()
                        .map(|(k, v)| Ok((k, v.into_pyobject(py)?.into_any().unbind())))
                        .collect::<PyResult<_>>()?;
                    d.insert(
                        "strategy".into(),
                        row.strategy.label().into_pyobject(py)?.into_any().unbind(),
                    );
                    d.insert(
                        "leverage".into(),
                        row.leverage.into_pyobject(py)?.into_any().unbind(),
                    );
                    rows.push(d);
                }
            }
            Ok(rows)
        })
    }
}

/// Grid search over the catalog followed by both GA runs on `candles`.
/// `grids` maps a rule id to replacement axes.
#[pyfunction]
#[pyo3(signature = (
    candles, seed, grids=None, generations=200, population_size=10, parents_mating=4,
    mutation_prob=0.5, crossover_prob=0.4, mutation_step=0.2, schedule="linear",
))]
#[allow(clippy::too_many_arguments)]
fn train(
    candles: &PyCandles,
    seed: u64,
    grids: Option<HashMap<String, Vec<Vec<f64>>>>,
    generations: usize,
    population_size: usize,
    parents_mating: usize,
    mutation_prob: f64,
    crossover_prob: f64,
    mutation_step: f64,
    schedule: &str,
) -> PyResult<PyModel> {
    let ga = ga_config(
        seed,
        "mssr",
        generations,
        population_size,
        parents_mating,
        mutation_prob,
        crossover_prob,
        mutation_step,
        schedule,
    )?;
    let mut catalog = rules::default_catalog();
    for (id, axes) in grids.unwrap_or_default() {
        let spec = spec_for(&id, Some(axes))?;
        let slot = catalog
            .iter_mut()
            .find(|r| r.id == id)
            .expect("catalog covers every kind");
        *slot = spec;
    }
    let training = pipeline::train(&candles.inner, &catalog, &ga).map_err(to_py)?;
    Ok(PyModel { catalog, training })
}

#[pyfunction]
fn one_hot(len: usize, index: usize) -> Vec<f64> {
    Chromosome::one_hot(len, index).weights
}

#[pymodule]
#[pyo3(name = "rulefx")]
fn rulefx_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCandles>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(moving_average, m)?)?;
    m.add_function(wrap_pyfunction!(rsi, m)?)?;
    m.add_function(wrap_pyfunction!(bollinger, m)?)?;
    m.add_function(wrap_pyfunction!(stochastic, m)?)?;
    m.add_function(wrap_pyfunction!(ssr, m)?)?;
    m.add_function(wrap_pyfunction!(rule_ids, m)?)?;
    m.add_function(wrap_pyfunction!(rule_params, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_rule, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(backtest, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(one_hot, m)?)?;
    Ok(())
}
