use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rulefx::backtest::TrainedModel;
use rulefx::data::{load_csv, split, CandleSeries};
use rulefx::indicators::{
    atr, bollinger, ichimoku, moving_average, rsi, stochastic, vortex, write_indicator_csv, MaKind,
};
use rulefx::optimize::FitnessKind;
use rulefx::pipeline::{
    evaluate, load_model, read_artifact, report_stem, train, write_evaluations, Manifest,
    FITNESS_KINDS, MANIFEST,
};

use crate::config::RunConfig;
use crate::{CliError, CommonArgs, IngestArgs};

pub fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    let series = match (&args.file, &args.config) {
        (Some(file), _) => {
            let pair = args.pair.clone().unwrap_or_else(|| {
                file.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            vec![load_csv(file, &pair)?]
        }
        (None, Some(config)) => {
            let cfg = RunConfig::load(config)?;
            cfg.pairs(args.pair.as_deref())?
                .into_iter()
                .map(|p| cfg.load_pair(p))
                .collect::<Result<Vec<_>, _>>()?
        }
        (None, None) => return Err(CliError::Usage("pass --config or --file".into())),
    };
    for s in &series {
        print_summary(s);
    }
    if let Some(path) = &args.indicators {
        let [s] = series.as_slice() else {
            return Err(CliError::Usage(
                "--indicators needs exactly one series; narrow with --pair".into(),
            ));
        };
        dump_indicators(s, path)?;
        println!("indicators: {}", path.display());
    }
    Ok(())
}

fn print_summary(s: &CandleSeries) {
    let gaps = s.gap_stats();
    let bars = s.bars();
    println!("pair: {}", s.pair());
    println!("bars: {}", s.len());
    if let (Some(first), Some(last)) = (bars.first(), bars.last()) {
        println!("range: {} .. {}", first.timestamp, last.timestamp);
    }
    println!("interval: {}s", s.bar_interval());
    println!(
        "gaps: regular {}, session {}, irregular {}, largest {}s",
        gaps.regular, gaps.session_gaps, gaps.irregular, gaps.largest_gap
    );
    println!("violations: 0");
}

fn dump_indicators(s: &CandleSeries, path: &Path) -> Result<(), CliError> {
    let closes = s.closes();
    let sma = moving_average(&closes, 20, MaKind::Sma)?;
    let ema = moving_average(&closes, 20, MaKind::Ema)?;
    let rsi14 = rsi(&closes, 14)?;
    let (k, d) = stochastic(s, 14, 3)?;
    let bb = bollinger(&closes, 20, 2.0)?;
    let atr14 = atr(s, 14)?;
    let (vip, vim) = vortex(s, 14)?;
    let ichi = ichimoku(s, 9, 26, 52)?;
    let columns = [
        ("sma_20", &sma),
        ("ema_20", &ema),
        ("rsi_14", &rsi14),
        ("stoch_k_14", &k),
        ("stoch_d_3", &d),
        ("bb_upper_20", &bb.upper),
        ("bb_lower_20", &bb.lower),
        ("atr_14", &atr14),
        ("vi_plus_14", &vip),
        ("vi_minus_14", &vim),
        ("tenkan_9", &ichi.tenkan_sen),
        ("kijun_26", &ichi.kijun_sen),
        ("senkou_a", &ichi.senkou_a),
        ("senkou_b_52", &ichi.senkou_b),
    ];
    let mut out = BufWriter::new(File::create(path).map_err(rulefx::Error::from)?);
    write_indicator_csv(&s.timestamps(), &columns, &mut out).map_err(rulefx::Error::from)?;
    out.flush().map_err(rulefx::Error::from)?;
    Ok(())
}

fn out_dir(args: &CommonArgs, cfg: &RunConfig) -> PathBuf {
    args.out.clone().unwrap_or_else(|| cfg.out_dir())
}

pub fn optimize(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let seed = args.seed.or(cfg.seed).ok_or_else(|| {
        CliError::Usage("a seed is required: set `seed` in the config or pass --seed".into())
    })?;
    let ga = cfg.ga(seed)?;
    let catalog = cfg.catalog()?;
    let out = out_dir(args, &cfg);
    for pair in cfg.pairs(args.pair.as_deref())? {
        let series = cfg.load_pair(pair)?;
        let (train_s, _) = split(&series, cfg.split())?;
        let training = train(&train_s, &catalog, &ga)?;
        let dir = out.join(&pair.symbol);
        training.write(&dir)?;
        Manifest {
            pair: pair.symbol.clone(),
            bars: series.len(),
            train_bars: train_s.len(),
            seed,
        }
        .write(&dir.join(MANIFEST))?;
        println!(
            "{}: trained on {} of {} bars (seed {seed})",
            pair.symbol,
            train_s.len(),
            series.len()
        );
        for run in &training.runs {
            println!(
                "  ga-{}: best fitness {:.6}",
                run.saved.fitness.as_str(),
                run.saved.best_fitness
            );
        }
        println!("  artifacts: {}", dir.display());
    }
    Ok(())
}

fn leverages(args: &CommonArgs, cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let list = args
        .leverage
        .clone()
        .unwrap_or_else(|| cfg.leverage.clone());
    if list.is_empty() || list.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(CliError::Usage(format!(
            "leverage must be a non-empty list of positive numbers, got {list:?}"
        )));
    }
    Ok(list)
}

pub fn backtest(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let leverage = leverages(args, &cfg)?;
    let catalog = cfg.catalog()?;
    let out = out_dir(args, &cfg);
    let stdout = io::stdout();
    for pair in cfg.pairs(args.pair.as_deref())? {
        let dir = out.join(&pair.symbol);
        let manifest = Manifest::read(&dir.join(MANIFEST))?;
        let series = cfg.load_pair(pair)?;
        if series.len() != manifest.bars {
            return Err(CliError::Data(format!(
                "{} has {} bars but was optimized on {}",
                pair.symbol,
                series.len(),
                manifest.bars
            )));
        }
        let test = series.suffix(manifest.train_bars);
        let models = FITNESS_KINDS
            .iter()
            .map(|&k| Ok((k, load_model(&dir, k, &catalog)?)))
            .collect::<Result<Vec<(FitnessKind, TrainedModel)>, CliError>>()?;
        let evaluations = evaluate(&test, &models, &leverage)?;
        write_evaluations(&dir, &evaluations)?;
        let mut lock = stdout.lock();
        for ev in &evaluations {
            writeln!(
                lock,
                "{}: test split {} bars, leverage 1:{}",
                pair.symbol,
                test.len(),
                ev.leverage
            )
            .map_err(rulefx::Error::from)?;
            ev.table
                .write_text(&mut lock)
                .map_err(rulefx::Error::from)?;
            writeln!(lock).map_err(rulefx::Error::from)?;
        }
    }
    Ok(())
}

pub fn report(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let leverage = leverages(args, &cfg)?;
    let out = out_dir(args, &cfg);
    for pair in cfg.pairs(args.pair.as_deref())? {
        let dir = out.join(&pair.symbol);
        for l in &leverage {
            let text = read_artifact(&dir.join(format!("{}.txt", report_stem(*l))))?;
            println!("{}: leverage 1:{l}", pair.symbol);
            print!("{text}");
            println!();
        }
    }
    Ok(())
}
