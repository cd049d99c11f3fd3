//! Train on one segment, persist the results as text artifacts, and
//! backtest a later segment from those artifacts alone.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::backtest::{
    compare_detailed, BacktestResult, ComparisonTable, StrategyKind, StrategySpec, TrainedModel,
};
use crate::data::CandleSeries;
use crate::error::{Error, Result};
use crate::metrics::log_returns;
use crate::optimize::{
    ga_evolve, optimize_catalog, Chromosome, FitnessKind, FitnessTrace, GaConfig, GridResult,
    Normalizer,
};
use crate::rules::{build_features, RuleKind, RuleParams, RuleSpec, SignalMatrix};

pub const MANIFEST: &str = "manifest.txt";
pub const GRID_RESULTS: &str = "grid_results.csv";
pub const GRID_SCORES: &str = "grid_scores.csv";
pub const FEATURES_TRAIN: &str = "features_train.csv";

pub const FITNESS_KINDS: [FitnessKind; 2] = [FitnessKind::Mr, FitnessKind::Mssr];

pub fn chromosome_file(kind: FitnessKind) -> String {
    format!("chromosome_{kind}.txt")
}

pub fn trace_file(kind: FitnessKind) -> String {
    format!("trace_{kind}.csv")
}

pub fn report_stem(leverage: f64) -> String {
    format!("report_L{leverage}")
}

pub fn equity_file(kind: StrategyKind, leverage: f64) -> String {
    format!("equity_{}_L{leverage}.csv", kind.slug())
}

/// Describes the training run so later stages can rebuild the same split.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub pair: String,
    pub bars: usize,
    pub train_bars: usize,
    pub seed: u64,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = create(path)?;
        writeln!(out, "pair = {}", self.pair)?;
        writeln!(out, "bars = {}", self.bars)?;
        writeln!(out, "train_bars = {}", self.train_bars)?;
        writeln!(out, "seed = {}", self.seed)?;
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = read_key_values(path)?;
        Ok(Self {
            pair: field(&kv, path, "pair")?.to_string(),
            bars: parse_field(&kv, path, "bars")?,
            train_bars: parse_field(&kv, path, "train_bars")?,
            seed: parse_field(&kv, path, "seed")?,
        })
    }
}

/// A trained chromosome with its in-sample normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedChromosome {
    pub fitness: FitnessKind,
    pub seed: u64,
    pub best_fitness: f64,
    pub normalizer: Normalizer,
    pub chromosome: Chromosome,
}

impl SavedChromosome {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = create(path)?;
        writeln!(out, "fitness = {}", self.fitness)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "best_fitness = {}", self.best_fitness)?;
        writeln!(out, "divisor = {}", self.normalizer.divisor)?;
        let w: Vec<String> = self
            .chromosome
            .weights
            .iter()
            .map(|w| w.to_string())
            .collect();
        writeln!(out, "weights = {}", w.join(","))?;
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = read_key_values(path)?;
        let weights = field(&kv, path, "weights")?
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| malformed(path, format!("bad weight `{w}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            fitness: field(&kv, path, "fitness")?
                .parse()
                .map_err(|_| malformed(path, "bad fitness".into()))?,
            seed: parse_field(&kv, path, "seed")?,
            best_fitness: parse_field(&kv, path, "best_fitness")?,
            normalizer: Normalizer {
                divisor: parse_field(&kv, path, "divisor")?,
            },
            chromosome: Chromosome::new(weights).map_err(|e| malformed(path, e.to_string()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    pub saved: SavedChromosome,
    pub trace: FitnessTrace,
}

/// Grid search plus one GA run per fitness kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub timestamps: Vec<i64>,
    pub grid: Vec<GridResult>,
    pub features: SignalMatrix,
    pub runs: Vec<GaRun>,
}

impl Training {
    pub fn params(&self) -> Vec<RuleParams> {
        self.grid.iter().map(|g| g.best_params.clone()).collect()
    }

    pub fn run(&self, kind: FitnessKind) -> Option<&GaRun> {
        self.runs.iter().find(|r| r.saved.fitness == kind)
    }

    pub fn model(&self, kind: FitnessKind, catalog: &[RuleSpec]) -> Option<TrainedModel> {
        self.run(kind).map(|r| TrainedModel {
            catalog: catalog.to_vec(),
            params: self.params(),
            chromosome: r.saved.chromosome.clone(),
            normalizer: r.saved.normalizer,
        })
    }

    /// Writes grid results, features, chromosomes and traces into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = create(&dir.join(GRID_RESULTS))?;
        crate::optimize::write_grid_results_csv(&self.grid, &mut out)?;
        out.flush()?;

        let mut out = create(&dir.join(GRID_SCORES))?;
        writeln!(out, "rule_id,params,score")?;
        for g in &self.grid {
            for (p, s) in &g.all_scores {
                writeln!(out, "{},{},{}", g.rule_id, p.describe(g.kind), s)?;
            }
        }
        out.flush()?;

        let mut out = create(&dir.join(FEATURES_TRAIN))?;
        self.features.write_csv(&self.timestamps, &mut out)?;
        out.flush()?;

        for run in &self.runs {
            run.saved
                .write(&dir.join(chromosome_file(run.saved.fitness)))?;
            let mut out = create(&dir.join(trace_file(run.saved.fitness)))?;
            run.trace.write_csv(&mut out)?;
            out.flush()?;
        }
        Ok(())
    }
}

pub fn train(candles: &CandleSeries, catalog: &[RuleSpec], ga: &GaConfig) -> Result<Training> {
    let grid = optimize_catalog(catalog, candles)?;
    let params: Vec<RuleParams> = grid.iter().map(|g| g.best_params.clone()).collect();
    let features = build_features(candles, catalog, &params)?;
    let returns = log_returns(candles)?;
    let runs = FITNESS_KINDS
        .iter()
        .map(|&kind| {
            let cfg = GaConfig {
                fitness: kind,
                ..ga.clone()
            };
            let (chromosome, trace) = ga_evolve(&features, &returns, &cfg)?;
            let normalizer = Normalizer::fit(&chromosome, &features)?;
            let best_fitness = trace.records.last().map_or(f64::NAN, |r| r.best_fitness);
            Ok(GaRun {
                saved: SavedChromosome {
                    fitness: kind,
                    seed: cfg.seed,
                    best_fitness,
                    normalizer,
                    chromosome,
                },
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Training {
        timestamps: candles.timestamps(),
        grid,
        features,
        runs,
    })
}

/// Best parameters per catalog rule from a grid-results file.
pub fn read_grid_params(path: &Path, catalog: &[RuleSpec]) -> Result<Vec<RuleParams>> {
    let text = read_artifact(path)?;
    let mut by_id: BTreeMap<String, (RuleKind, RuleParams)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(malformed(
                path,
                format!("line {}: expected 4 fields", i + 1),
            ));
        }
        let kind = RuleKind::from_id(fields[0])
            .ok_or_else(|| malformed(path, format!("unknown rule `{}`", fields[0])))?;
        let params =
            RuleParams::parse(kind, fields[1]).map_err(|e| malformed(path, e.to_string()))?;
        by_id.insert(fields[0].to_string(), (kind, params));
    }
    catalog
        .iter()
        .map(|rule| match by_id.get(&rule.id) {
            Some((kind, p)) if *kind == rule.kind => Ok(p.clone()),
            _ => Err(malformed(path, format!("no entry for rule `{}`", rule.id))),
        })
        .collect()
}

/// Rebuilds a trained model from the artifacts in `dir`.
pub fn load_model(dir: &Path, kind: FitnessKind, catalog: &[RuleSpec]) -> Result<TrainedModel> {
    let params = read_grid_params(&dir.join(GRID_RESULTS), catalog)?;
    let saved = SavedChromosome::read(&dir.join(chromosome_file(kind)))?;
    if saved.chromosome.len() != catalog.len() {
        return Err(Error::DimensionMismatch {
            weights: saved.chromosome.len(),
            columns: catalog.len(),
        });
    }
    Ok(TrainedModel {
        catalog: catalog.to_vec(),
        params,
        chromosome: saved.chromosome,
        normalizer: saved.normalizer,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub leverage: f64,
    pub table: ComparisonTable,
    pub results: Vec<BacktestResult>,
}

/// B&H, S&H, GA-MR and GA-MSSR at each leverage.
pub fn evaluate(
    candles: &CandleSeries,
    models: &[(FitnessKind, TrainedModel)],
    leverages: &[f64],
) -> Result<Vec<Evaluation>> {
    if leverages.is_empty() {
        return Err(Error::InvalidConfig("no leverage given".into()));
    }
    leverages
        .iter()
        .map(|&leverage| {
            let mut specs = vec![
                StrategySpec::buy_hold().with_leverage(leverage),
                StrategySpec::sell_hold().with_leverage(leverage),
            ];
            for (kind, model) in models {
                specs.push(
                    StrategySpec::weighted(StrategyKind::for_fitness(*kind), model.clone())
                        .with_leverage(leverage),
                );
            }
            let (table, results) = compare_detailed(&specs, candles)?;
            Ok(Evaluation {
                leverage,
                table,
                results,
            })
        })
        .collect()
}

/// Writes `report_L*.csv`, `report_L*.txt` and one equity curve per
/// strategy and leverage.
pub fn write_evaluations(dir: &Path, evaluations: &[Evaluation]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for ev in evaluations {
        let stem = report_stem(ev.leverage);
        let csv = dir.join(format!("{stem}.csv"));
        let mut out = create(&csv)?;
        ev.table.write_csv(&mut out)?;
        out.flush()?;
        let txt = dir.join(format!("{stem}.txt"));
        let mut out = create(&txt)?;
        ev.table.write_text(&mut out)?;
        out.flush()?;
        written.push(csv);
        written.push(txt);
        for r in &ev.results {
            let path = dir.join(equity_file(r.kind, ev.leverage));
            let mut out = create(&path)?;
            r.equity.write_csv(&mut out)?;
            out.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn malformed(path: &Path, reason: String) -> Error {
    Error::MalformedArtifact {
        path: path.to_path_buf(),
        reason,
    }
}

pub fn read_artifact(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifacts(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = read_artifact(path)?;
    let mut kv = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| malformed(path, format!("expected key = value, got `{line}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(kv)
}

fn field<'a>(kv: &'a BTreeMap<String, String>, path: &Path, key: &str) -> Result<&'a str> {
    kv.get(key)
        .map(String::as_str)
        .ok_or_else(|| malformed(path, format!("missing key `{key}`")))
}

fn parse_field<T: std::str::FromStr>(
    kv: &BTreeMap<String, String>,
    path: &Path,
    key: &str,
) -> Result<T> {
    field(kv, path, key)?
        .parse()
        .map_err(|_| malformed(path, format!("bad value for `{key}`")))
}
