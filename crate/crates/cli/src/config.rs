//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//! leverage = [1, 20]
//! train_fraction = 0.5
//!
//! [[pairs]]
//! symbol = "EURUSD"
//! path = "data/eurusd_5m.csv"
//!
//! [[pairs]]
//! symbol = "SYN-UP"
//! synthetic = { regime = "trend-up", bars = 4000, seed = 1 }
//!
//! [ga]
//! generations = 200
//! schedule = "linear"
//!
//! [grids.sma_fast_x_slow]
//! fast = [2, 5, 10]
//! slow = { start = 20, end = 100, step = 10 }
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use rulefx::data::{load_csv, synthesize, CandleSeries, Regime, SplitSpec};
use rulefx::optimize::{GaConfig, MutationSchedule};
use rulefx::rules::{default_catalog, ParamGrid, RuleSpec};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_leverage")]
    pub leverage: Vec<f64>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    #[serde(default)]
    pub ga: GaSection,
    /// Rule id to parameter name to axis.
    #[serde(default)]
    pub grids: BTreeMap<String, BTreeMap<String, AxisSpec>>,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_leverage() -> Vec<f64> {
    vec![1.0]
}

fn default_train_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub symbol: String,
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub regime: String,
    pub bars: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub population_size: Option<usize>,
    pub parents_mating: Option<usize>,
    pub generations: Option<usize>,
    pub mutation_prob: Option<f64>,
    pub crossover_prob: Option<f64>,
    pub mutation_step: Option<f64>,
    pub mutation_step_final: Option<f64>,
    pub schedule: Option<String>,
}

/// Either an explicit list of values or an inclusive arithmetic range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values(Vec<f64>),
    Range { start: f64, end: f64, step: f64 },
}

impl AxisSpec {
    fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            AxisSpec::Values(v) => Ok(v.clone()),
            AxisSpec::Range { start, end, step } => {
                if step.is_nan() || *step <= 0.0 || end < start {
                    return Err(format!("bad range {start}..={end} step {step}"));
                }
                Ok(ParamGrid::range(*start, *end, *step))
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.pairs.is_empty() {
            return Err(CliError::Config("no pairs configured".into()));
        }
        for p in &self.pairs {
            if p.path.is_some() == p.synthetic.is_some() {
                return Err(CliError::Config(format!(
                    "pair {} needs exactly one of `path` or `synthetic`",
                    p.symbol
                )));
            }
        }
        SplitSpec::new(self.train_fraction)?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec::new(self.train_fraction).expect("validated on load")
    }

    /// Pairs to process; `only` narrows to one symbol.
    pub fn pairs(&self, only: Option<&str>) -> Result<Vec<&PairConfig>, CliError> {
        let picked: Vec<_> = self
            .pairs
            .iter()
            .filter(|p| only.is_none_or(|s| p.symbol == s))
            .collect();
        if picked.is_empty() {
            return Err(CliError::Config(format!(
                "pair {} not in config",
                only.unwrap_or_default()
            )));
        }
        Ok(picked)
    }

    pub fn load_pair(&self, pair: &PairConfig) -> Result<CandleSeries, CliError> {
        match (&pair.path, &pair.synthetic) {
            (Some(p), _) => Ok(load_csv(self.resolve(p), &pair.symbol)?),
            (None, Some(s)) => {
                let regime: Regime = s.regime.parse()?;
                let series = synthesize(s.seed, s.bars, regime)?;
                Ok(CandleSeries::new(
                    pair.symbol.clone(),
                    series.bars().to_vec(),
                )?)
            }
            (None, None) => unreachable!("validated on load"),
        }
    }

    pub fn ga(&self, seed: u64) -> Result<GaConfig, CliError> {
        let d = GaConfig::default();
        let g = &self.ga;
        let cfg = GaConfig {
            population_size: g.population_size.unwrap_or(d.population_size),
            parents_mating: g.parents_mating.unwrap_or(d.parents_mating),
            generations: g.generations.unwrap_or(d.generations),
            mutation_prob: g.mutation_prob.unwrap_or(d.mutation_prob),
            crossover_prob: g.crossover_prob.unwrap_or(d.crossover_prob),
            mutation_step: g.mutation_step.unwrap_or(d.mutation_step),
            mutation_step_final: g.mutation_step_final.unwrap_or(d.mutation_step_final),
            mutation_schedule: match &g.schedule {
                Some(s) => s.parse::<MutationSchedule>()?,
                None => d.mutation_schedule,
            },
            seed,
            fitness: d.fitness,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The default catalog with configured grid overrides applied.
    pub fn catalog(&self) -> Result<Vec<RuleSpec>, CliError> {
        let mut catalog = default_catalog();
        for (id, overrides) in &self.grids {
            let rule = catalog
                .iter_mut()
                .find(|r| &r.id == id)
                .ok_or_else(|| CliError::Config(format!("unknown rule `{id}` in grids")))?;
            let names = rule.kind.param_names();
            let mut axes = rule.grid.axes().to_vec();
            for (name, axis) in overrides {
                let i = names.iter().position(|n| n == name).ok_or_else(|| {
                    CliError::Config(format!("rule `{id}` has no parameter `{name}`"))
                })?;
                axes[i] = axis
                    .values()
                    .map_err(|e| CliError::Config(format!("grids.{id}.{name}: {e}")))?;
            }
            *rule = RuleSpec::with_grid(rule.kind, ParamGrid::new(axes))?;
        }
        Ok(catalog)
    }
}
