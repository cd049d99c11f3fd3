use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{ssr, strategy_returns, PositionSeries, ReturnSeries};
use crate::rules::SignalMatrix;

/// One weight per feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub weights: Vec<f64>,
}

impl Chromosome {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { weights })
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `raw_t = sum_i w_i * s_{i,t}`.
pub fn raw_positions(w: &Chromosome, signals: &SignalMatrix) -> Result<Vec<f64>> {
    if w.len() != signals.n_columns() {
        return Err(Error::DimensionMismatch {
            weights: w.len(),
            columns: signals.n_columns(),
        });
    }
    let mut raw = vec![0.0; signals.n_rows()];
    for (wi, col) in w.weights.iter().zip(signals.columns()) {
        for (r, s) in raw.iter_mut().zip(col.values()) {
            *r += wi * s.as_f64();
        }
    }
    Ok(raw)
}

/// Scale that maps in-sample raw positions onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    /// In-sample `max |raw_t|`; 0 means every position is flat.
    pub divisor: f64,
}

impl Normalizer {
    pub fn fit(w: &Chromosome, signals: &SignalMatrix) -> Result<Self> {
        let raw = raw_positions(w, signals)?;
        Ok(Self {
            divisor: raw.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
        })
    }

    /// `raw / divisor`, clipped to `[-1, 1]`.
    pub fn apply(&self, w: &Chromosome, signals: &SignalMatrix) -> Result<PositionSeries> {
        let raw = raw_positions(w, signals)?;
        Ok(self.scale(raw))
    }

    fn scale(&self, raw: Vec<f64>) -> PositionSeries {
        let v = if self.divisor > 0.0 {
            raw.into_iter()
                .map(|r| (r / self.divisor).clamp(-1.0, 1.0))
                .collect()
        } else {
            vec![0.0; raw.len()]
        };
        PositionSeries::new(v).expect("clipped positions are bounded")
    }
}

/// In-sample normalized positions: the largest magnitude is exactly 1, or
/// everything is 0.
pub fn positions_from_weights(w: &Chromosome, signals: &SignalMatrix) -> Result<PositionSeries> {
    let raw = raw_positions(w, signals)?;
    let divisor = raw.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    Ok(Normalizer { divisor }.scale(raw))
}

/// Total strategy log return.
pub fn fitness_mr(v: &PositionSeries, r: &ReturnSeries) -> Result<f64> {
    Ok(strategy_returns(v, r)?.total())
}

/// SSR of the strategy returns.
pub fn fitness_mssr(v: &PositionSeries, r: &ReturnSeries) -> Result<f64> {
    ssr(&strategy_returns(v, r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitnessKind {
    Mr,
    Mssr,
}

impl FitnessKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitnessKind::Mr => "mr",
            FitnessKind::Mssr => "mssr",
        }
    }
}

impl fmt::Display for FitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitnessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr" | "ga-mr" => Ok(FitnessKind::Mr),
            "mssr" | "ga-mssr" => Ok(FitnessKind::Mssr),
            _ => Err(Error::InvalidConfig(format!("unknown fitness `{s}`"))),
        }
    }
}

/// How the Gaussian mutation step evolves over generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationSchedule {
    Constant,
    /// Straight line from `mutation_step` to `mutation_step_final`.
    Linear,
    /// Geometric interpolation from `mutation_step` to `mutation_step_final`.
    Geometric,
}

impl MutationSchedule {
    pub fn as_str(&self) -> &'static str {
        match self {
            MutationSchedule::Constant => "constant",
            MutationSchedule::Linear => "linear",
            MutationSchedule::Geometric => "geometric",
        }
    }
}

impl FromStr for MutationSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(MutationSchedule::Constant),
            "linear" => Ok(MutationSchedule::Linear),
            "geometric" => Ok(MutationSchedule::Geometric),
            _ => Err(Error::InvalidConfig(format!(
                "unknown mutation schedule `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub parents_mating: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub crossover_prob: f64,
    /// Standard deviation of a gene mutation at generation 0.
    pub mutation_step: f64,
    pub mutation_step_final: f64,
    pub mutation_schedule: MutationSchedule,
    pub seed: u64,
    pub fitness: FitnessKind,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            parents_mating: 4,
            generations: 200,
            mutation_prob: 0.5,
            crossover_prob: 0.4,
            mutation_step: 0.2,
            mutation_step_final: 0.0,
            mutation_schedule: MutationSchedule::Linear,
            seed: 0,
            fitness: FitnessKind::Mssr,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be >= 2, got {}",
                self.population_size
            ));
        }
        if self.parents_mating == 0 || self.parents_mating > self.population_size {
            return bad(format!(
                "parents_mating must lie in 1..={}, got {}",
                self.population_size, self.parents_mating
            ));
        }
        for (name, p) in [
            ("mutation_prob", self.mutation_prob),
            ("crossover_prob", self.crossover_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, s) in [
            ("mutation_step", self.mutation_step),
            ("mutation_step_final", self.mutation_step_final),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {s}"));
            }
        }
        if self.mutation_schedule == MutationSchedule::Geometric
            && (self.mutation_step == 0.0) != (self.mutation_step_final == 0.0)
        {
            return bad("geometric schedule needs both steps positive".into());
        }
        Ok(())
    }

    /// Mutation standard deviation used when breeding generation `g + 1`.
    pub fn step_at(&self, g: usize) -> f64 {
        let frac = if self.generations > 1 {
            g as f64 / (self.generations - 1) as f64
        } else {
            0.0
        };
        let (a, b) = (self.mutation_step, self.mutation_step_final);
        match self.mutation_schedule {
            MutationSchedule::Constant => a,
            MutationSchedule::Linear => a + (b - a) * frac,
            MutationSchedule::Geometric if a > 0.0 => a * (b / a).powf(frac),
            MutationSchedule::Geometric => 0.0,
        }
    }
}

/// Read-only data shared by all fitness evaluations.
pub struct FitnessContext<'a> {
    pub signals: &'a SignalMatrix,
    pub returns: &'a ReturnSeries,
    pub kind: FitnessKind,
    dense: Vec<Vec<f64>>,
}

impl<'a> FitnessContext<'a> {
    pub fn new(
        signals: &'a SignalMatrix,
        returns: &'a ReturnSeries,
        kind: FitnessKind,
    ) -> Result<Self> {
        if signals.n_rows() != returns.len() {
            return Err(Error::LengthMismatch {
                left: signals.n_rows(),
                right: returns.len(),
            });
        }
        Ok(Self {
            signals,
            returns,
            kind,
            dense: signals.columns().iter().map(|c| c.as_f64()).collect(),
        })
    }

    /// Same arithmetic, in the same order, as `positions_from_weights`
    /// followed by `fitness_mr` or `fitness_mssr`.
    pub fn evaluate(&self, w: &Chromosome) -> Result<f64> {
        if w.len() != self.dense.len() {
            return Err(Error::DimensionMismatch {
                weights: w.len(),
                columns: self.dense.len(),
            });
        }
        let n = self.returns.len();
        let mut raw = vec![0.0; n];
        for (wi, col) in w.weights.iter().zip(&self.dense) {
            for (r, s) in raw.iter_mut().zip(col) {
                *r += wi * s;
            }
        }
        let divisor = raw.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
        let r = self.returns.values();
        let mut p = Vec::with_capacity(n);
        if n > 0 {
            p.push(0.0);
        }
        for t in 0..n.saturating_sub(1) {
            let v = if divisor > 0.0 {
                (raw[t] / divisor).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            p.push(v * r[t + 1]);
        }
        match self.kind {
            FitnessKind::Mr => Ok(p.iter().sum()),
            FitnessKind::Mssr => ssr(&ReturnSeries::new(p)?),
        }
    }

    fn evaluate_all(&self, population: &[Chromosome]) -> Result<Vec<f64>> {
        population.par_iter().map(|c| self.evaluate(c)).collect()
    }
}

/// One generation: elitism of 1, rank-weighted choice among the top
/// `parents_mating`, uniform crossover, Gaussian per-gene mutation.
pub fn ga_step(
    population: &[Chromosome],
    cfg: &GaConfig,
    ctx: &FitnessContext<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Chromosome>> {
    cfg.validate()?;
    check_population(population, cfg)?;
    let fitness = ctx.evaluate_all(population)?;
    Ok(breed(population, &fitness, cfg, cfg.step_at(0), rng))
}

fn check_population(population: &[Chromosome], cfg: &GaConfig) -> Result<()> {
    if population.len() != cfg.population_size {
        return Err(Error::BadPopulationSize {
            expected: cfg.population_size,
            got: population.len(),
        });
    }
    Ok(())
}

fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    order
}

fn breed(
    population: &[Chromosome],
    fitness: &[f64],
    cfg: &GaConfig,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Chromosome> {
    let order = ranking(fitness);
    let parents = &order[..cfg.parents_mating];
    // Rank weights m, m-1, ..., 1.
    let m = parents.len();
    let total = m * (m + 1) / 2;
    let pick = |rng: &mut ChaCha8Rng| {
        let mut u = rng.random_range(0..total);
        for (rank, &idx) in parents.iter().enumerate() {
            let w = m - rank;
            if u < w {
                return idx;
            }
            u -= w;
        }
        parents[m - 1]
    };
    let normal = Normal::new(0.0, step.max(f64::MIN_POSITIVE)).expect("finite step");
    let mut next = Vec::with_capacity(population.len());
    next.push(population[order[0]].clone());
    while next.len() < population.len() {
        let a = &population[pick(rng)];
        let b = &population[pick(rng)];
        let mut genes = if rng.random::<f64>() < cfg.crossover_prob {
            a.weights
                .iter()
                .zip(&b.weights)
                .map(|(x, y)| if rng.random::<bool>() { *x } else { *y })
                .collect()
        } else {
            a.weights.clone()
        };
        for g in genes.iter_mut() {
            if rng.random::<f64>() < cfg.mutation_prob {
                *g += if step > 0.0 { normal.sample(rng) } else { 0.0 };
            }
        }
        next.push(Chromosome { weights: genes });
    }
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best: Chromosome,
}

/// Per-generation summary, generation 0 being the random initial population.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitnessTrace {
    pub records: Vec<GenerationRecord>,
}

impl FitnessTrace {
    fn push(&mut self, generation: usize, population: &[Chromosome], fitness: &[f64]) {
        let best = ranking(fitness)[0];
        self.records.push(GenerationRecord {
            generation,
            best_fitness: fitness[best],
            mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
            best: population[best].clone(),
        });
    }

    pub fn best_fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].best_fitness >= w[0].best_fitness)
    }

    /// `generation,best_fitness,mean_fitness,w0,w1,...`
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let genes = self.records.first().map_or(0, |r| r.best.len());
        write!(out, "generation,best_fitness,mean_fitness")?;
        for i in 0..genes {
            write!(out, ",w{i}")?;
        }
        writeln!(out)?;
        for r in &self.records {
            write!(
                out,
                "{},{},{}",
                r.generation, r.best_fitness, r.mean_fitness
            )?;
            for w in &r.best.weights {
                write!(out, ",{w}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Evolves feature weights from a seeded population uniform in `[-1, 1]`.
/// Returns the best chromosome of the final generation, which elitism makes
/// the best ever seen.
pub fn ga_evolve(
    signals: &SignalMatrix,
    returns: &ReturnSeries,
    cfg: &GaConfig,
) -> Result<(Chromosome, FitnessTrace)> {
    cfg.validate()?;
    if signals.n_rows() == 0 || signals.n_columns() == 0 {
        return Err(Error::SeriesTooShort {
            needed: 1,
            got: signals.n_rows(),
        });
    }
    let ctx = FitnessContext::new(signals, returns, cfg.fitness)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let genes = signals.n_columns();
    let mut population: Vec<Chromosome> = (0..cfg.population_size)
        .map(|_| Chromosome {
            weights: (0..genes).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        })
        .collect();
    let mut fitness = ctx.evaluate_all(&population)?;
    let mut trace = FitnessTrace::default();
    trace.push(0, &population, &fitness);
    for g in 0..cfg.generations {
        population = breed(&population, &fitness, cfg, cfg.step_at(g), &mut rng);
        fitness = ctx.evaluate_all(&population)?;
        trace.push(g + 1, &population, &fitness);
    }
    let best = trace
        .records
        .last()
        .expect("generation 0 recorded")
        .best
        .clone();
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Signal, SignalSeries};

    fn fixture(n: usize, cols: usize, seed: u64) -> (SignalMatrix, ReturnSeries) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = vec![0.0];
        r.extend((1..n).map(|_| rng.random_range(-0.01..0.01)));
        let columns = (0..cols)
            .map(|_| {
                SignalSeries::new(
                    (0..n)
                        .map(|_| Signal::from_i8(rng.random_range(-1..=1)).unwrap())
                        .collect(),
                )
            })
            .collect();
        let ids = (0..cols).map(|i| format!("c{i}")).collect();
        (
            SignalMatrix::new(ids, columns).unwrap(),
            ReturnSeries::new(r).unwrap(),
        )
    }

    #[test]
    fn one_hot_recovers_column() {
        let (m, _) = fixture(50, 4, 1);
        let v = positions_from_weights(&Chromosome::one_hot(4, 2), &m).unwrap();
        assert_eq!(v.values(), m.column(2).as_f64().as_slice());
        let zero = positions_from_weights(&Chromosome::new(vec![0.0; 4]).unwrap(), &m).unwrap();
        assert!(zero.values().iter().all(|&x| x == 0.0));
        assert!(matches!(
            positions_from_weights(&Chromosome::one_hot(3, 0), &m),
            Err(Error::DimensionMismatch {
                weights: 3,
                columns: 4
            })
        ));
    }

    #[test]
    fn uniform_weights_all_long() {
        let col = SignalSeries::new(vec![Signal::Long; 10]);
        let m = SignalMatrix::new(vec!["a".into(), "b".into()], vec![col.clone(), col]).unwrap();
        let v = positions_from_weights(&Chromosome::new(vec![2.0, 2.0]).unwrap(), &m).unwrap();
        assert!(v.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn normalizer_reuses_divisor_and_clips() {
        let (m, _) = fixture(60, 3, 2);
        let w = Chromosome::new(vec![0.5, -0.2, 0.1]).unwrap();
        let n = Normalizer::fit(&w, &m).unwrap();
        assert_eq!(
            n.apply(&w, &m).unwrap(),
            positions_from_weights(&w, &m).unwrap()
        );
        let tight = Normalizer { divisor: 0.1 };
        let v = tight.apply(&w, &m).unwrap();
        assert!(v.max_abs() <= 1.0);
        assert!(v.values().iter().any(|x| x.abs() == 1.0));
    }

    #[test]
    fn fitness_delegates_to_metrics() {
        let (m, r) = fixture(80, 5, 3);
        let w = Chromosome::new(vec![0.3, -0.1, 0.7, 0.0, -0.4]).unwrap();
        let v = positions_from_weights(&w, &m).unwrap();
        let p = strategy_returns(&v, &r).unwrap();
        assert_eq!(fitness_mr(&v, &r).unwrap(), p.total());
        assert_eq!(fitness_mssr(&v, &r).unwrap(), ssr(&p).unwrap());
        let mr = fitness_mr(&v, &r).unwrap();
        let mssr = fitness_mssr(&v, &r).unwrap();
        assert_eq!(mr.signum(), mssr.signum());
        for kind in [FitnessKind::Mr, FitnessKind::Mssr] {
            let ctx = FitnessContext::new(&m, &r, kind).unwrap();
            let direct = match kind {
                FitnessKind::Mr => mr,
                FitnessKind::Mssr => mssr,
            };
            assert_eq!(ctx.evaluate(&w).unwrap(), direct);
        }
        let long = PositionSeries::constant(80, 1.0).unwrap();
        assert_eq!(fitness_mr(&long, &r).unwrap(), r.total());
    }

    #[test]
    fn degenerate_operators_copy_parents() {
        let (m, r) = fixture(100, 4, 4);
        let cfg = GaConfig {
            mutation_prob: 0.0,
            crossover_prob: 0.0,
            fitness: FitnessKind::Mr,
            ..GaConfig::default()
        };
        let ctx = FitnessContext::new(&m, &r, cfg.fitness).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pop: Vec<Chromosome> = (0..10)
            .map(|_| {
                Chromosome::new((0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
            })
            .collect();
        let fit = ctx.evaluate_all(&pop).unwrap();
        let top: Vec<&Chromosome> = ranking(&fit)[..4].iter().map(|&i| &pop[i]).collect();
        let next = ga_step(&pop, &cfg, &ctx, &mut rng).unwrap();
        assert_eq!(&next[0], top[0]);
        assert!(next.iter().all(|c| top.contains(&c)));
    }

    #[test]
    fn step_checks_population_and_keeps_best() {
        let (m, r) = fixture(100, 4, 5);
        let cfg = GaConfig {
            fitness: FitnessKind::Mr,
            ..GaConfig::default()
        };
        let ctx = FitnessContext::new(&m, &r, cfg.fitness).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = vec![Chromosome::one_hot(4, 0); 3];
        assert!(matches!(
            ga_step(&pop, &cfg, &ctx, &mut rng),
            Err(Error::BadPopulationSize {
                expected: 10,
                got: 3
            })
        ));
        let pop: Vec<Chromosome> = (0..10).map(|i| Chromosome::one_hot(4, i % 4)).collect();
        let before = ctx.evaluate_all(&pop).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(2);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        let next = ga_step(&pop, &cfg, &ctx, &mut a).unwrap();
        assert_eq!(next, ga_step(&pop, &cfg, &ctx, &mut b).unwrap());
        let after = ctx.evaluate_all(&next).unwrap();
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(max(&after) >= max(&before));
    }

    #[test]
    fn evolve_deterministic_and_monotone() {
        let (m, r) = fixture(300, 6, 6);
        let cfg = GaConfig {
            generations: 30,
            seed: 11,
            ..GaConfig::default()
        };
        let (c1, t1) = ga_evolve(&m, &r, &cfg).unwrap();
        let (c2, t2) = ga_evolve(&m, &r, &cfg).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(t1, t2);
        assert_eq!(t1.records.len(), 31);
        assert!(t1.is_non_decreasing());
        let mut csv = Vec::new();
        t1.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("generation,best_fitness,mean_fitness,w0,"));
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let (m, r) = fixture(100, 3, 7);
        let cfg = GaConfig {
            generations: 0,
            ..GaConfig::default()
        };
        let (c, t) = ga_evolve(&m, &r, &cfg).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(c, t.records[0].best);
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GaConfig {
                parents_mating: 11,
                ..ok.clone()
            },
            GaConfig {
                parents_mating: 0,
                ..ok.clone()
            },
            GaConfig {
                mutation_prob: 1.5,
                ..ok.clone()
            },
            GaConfig {
                population_size: 1,
                parents_mating: 1,
                ..ok.clone()
            },
            GaConfig {
                mutation_step: f64::NAN,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert_eq!(ok.step_at(0), 0.2);
        assert_eq!(ok.step_at(199), 0.0);
        let geo = GaConfig {
            mutation_schedule: MutationSchedule::Geometric,
            mutation_step_final: 0.02,
            ..ok.clone()
        };
        assert!((geo.step_at(199) - 0.02).abs() < 1e-15);
        assert!(GaConfig {
            mutation_step_final: 0.0,
            ..geo
        }
        .validate()
        .is_err());
        let c = GaConfig {
            mutation_schedule: MutationSchedule::Constant,
            ..ok
        };
        assert_eq!(c.step_at(150), 0.2);
    }
}
