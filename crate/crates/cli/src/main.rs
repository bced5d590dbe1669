//! `ordreg`: generate data, train, cross-validate, evaluate and compare
//! ordinal regression methods.
//!
//! Exit codes: 0 on success, 1 for bad input or configuration, 2 when a run
//! fails. Log verbosity comes from `ORDREG_LOG` (e.g. `ORDREG_LOG=info`).

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ordreg_core::data::{self, infer_num_classes, load_csv, resolve_ties, train_val_split};
use ordreg_core::harness::{self, compare_methods, evaluate_ensemble, run_cv_many, train_one};
use ordreg_core::metrics::{Alternative, MetricReport, DEFAULT_BINS};
use ordreg_core::report::{self, DatasetInfo, FoldMetrics};
use ordreg_core::{CvSettings, Dataset, DecodeRule, Method, TieHandling, TrainConfig};

use config::{override_seeds, read_json, ExperimentConfig};

/// A problem with the user's input; maps to exit code 1.
#[derive(Debug)]
pub struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// Treat any library error while reading user-supplied files as input error.
fn as_input(e: ordreg_core::Error) -> anyhow::Error {
    input(e.to_string())
}

#[derive(Parser)]
#[command(name = "ordreg", version, about = "Ordinal regression with multi-rater soft labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic multi-rater dataset as CSV.
    Generate(GenerateArgs),
    /// Train one method on a stratified train/validation split.
    Train(TrainArgs),
    /// Cross-validate one or more methods.
    Cv(CvArgs),
    /// Compute metrics from a records CSV.
    Evaluate(EvaluateArgs),
    /// Paired one-sided t-test between two method result directories.
    Compare(CompareArgs),
    /// Confusion, calibration and risk-coverage tables from a records CSV.
    Curves(CurvesArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Synthetic data config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeArg {
    Count,
    Argmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum TiesArg {
    Exclude,
    Lowest,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Lower,
    Higher,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of classes; inferred from the data when omitted.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the split seed and every training seed (seed, seed+1, ...).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    decode: Option<DecodeArg>,
    #[arg(long, value_enum)]
    ties: Option<TiesArg>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long)]
    method: String,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Comma-separated method names.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    /// Worker threads for fold and seed jobs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Write the metrics here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Result directory of the first method (`<results>/<method>`).
    a: PathBuf,
    /// Result directory of the second method.
    b: PathBuf,
    #[arg(long)]
    metric: String,
    /// Hypothesis about the first method's metric relative to the second.
    #[arg(long, value_enum)]
    direction: DirectionArg,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long)]
    records: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Raw counts in the confusion matrix instead of row fractions.
    #[arg(long)]
    counts: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORDREG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() {
        return 1;
    }
    match e.downcast_ref::<ordreg_core::Error>() {
        Some(core) if core.is_input_error() => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Train(args) => train(args),
        Command::Cv(args) => cv(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Compare(args) => compare(args),
        Command::Curves(args) => curves(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut cfg: ordreg_core::SyntheticConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(as_input)?;
    let dataset = data::generate_synthetic(&cfg)?;
    data::write_csv(&dataset, &args.out)?;
    log::info!("wrote {} examples to {}", dataset.len(), args.out.display());
    Ok(())
}

/// Settings resolved from config file and flags.
struct Resolved {
    dataset: Dataset,
    train: TrainConfig,
    split_seed: u64,
    out: PathBuf,
    file: ExperimentConfig,
}

fn resolve(args: &ExperimentArgs) -> Result<Resolved> {
    let file: ExperimentConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => ExperimentConfig::default(),
    };
    let mut train = file.train.clone();
    if let Some(rule) = args.decode {
        train.decode = Some(match rule {
            DecodeArg::Count => DecodeRule::Count,
            DecodeArg::Argmax => DecodeRule::Argmax,
        });
    }
    if let Some(ties) = args.ties {
        train.ties = match ties {
            TiesArg::Exclude => TieHandling::Exclude,
            TiesArg::Lowest => TieHandling::Lowest,
        };
    }
    if let Some(epochs) = args.epochs {
        train.epochs = epochs;
    }
    if let Some(lr) = args.lr {
        train.adam.lr = lr;
    }
    if let Some(b) = args.batch_size {
        train.batch_size = b;
    }
    let mut split_seed = file.split_seed.unwrap_or(0);
    if let Some(seed) = args.seed {
        override_seeds(&mut train, seed);
        split_seed = seed;
    }
    train.validate().map_err(|e| input(format!("train: {e}")))?;

    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| input("no output location: pass --out or set `out` in the config"))?;
    let dataset = load_dataset(args, &file)?;
    Ok(Resolved {
        dataset,
        train,
        split_seed,
        out,
        file,
    })
}

fn load_dataset(args: &ExperimentArgs, file: &ExperimentConfig) -> Result<Dataset> {
    if let Some(path) = args.data.as_ref().or(file.data.as_ref()) {
        let classes = match args.classes.or(file.num_classes) {
            Some(k) => k,
            None => {
                let k = infer_num_classes(path).map_err(as_input)?;
                log::info!("inferred {k} classes from {}", path.display());
                k
            }
        };
        return load_csv(path, classes).map_err(as_input);
    }
    if let Some(cfg) = &file.synthetic {
        cfg.validate().map_err(|e| input(format!("synthetic: {e}")))?;
        return Ok(data::generate_synthetic(cfg)?);
    }
    Err(input(
        "no dataset: pass --data or set `data` or `synthetic` in the config",
    ))
}

fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods: Vec<Method> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Method>().map_err(as_input))
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(input(format!(
            "methods: none given; valid methods: {}",
            Method::valid_names()
        )));
    }
    let mut seen = methods.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != methods.len() {
        return Err(input("methods: duplicate entries"));
    }
    Ok(methods)
}

fn dataset_info(d: &Dataset) -> DatasetInfo {
    DatasetInfo {
        n_examples: d.len(),
        num_classes: d.spec().num_classes(),
        feature_dim: d.feature_dim(),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let method: Method = args.method.parse().map_err(as_input)?;
    let r = resolve(&args.common)?;
    let labels = r.dataset.hard_labels();
    let all: Vec<usize> = (0..r.dataset.len()).collect();
    let (train_idx, val_idx) =
        train_val_split(&all, &labels, r.train.train_fraction, r.split_seed).map_err(as_input)?;

    let models = r
        .train
        .seeds
        .iter()
        .map(|&seed| train_one(method, &r.train, &r.dataset, &train_idx, &val_idx, seed))
        .collect::<ordreg_core::Result<Vec<_>>>()?;
    for m in &models {
        m.params.save(&r.out.join(format!("model_seed{}.json", m.seed)))?;
        log::info!("seed {}: best epoch {}", m.seed, m.best_epoch);
    }
    let statuses = resolve_ties(&r.dataset, r.train.ties);
    let records = evaluate_ensemble(&models, &r.dataset, &val_idx, r.train.decode_rule(method), &statuses)?;
    let metrics = MetricReport::compute(&records, r.train.ece_bins)?;
    report::write_history(&r.out.join("history.csv"), &models)?;
    report::write_records(&r.out.join("records.csv"), &records)?;
    report::write_json(
        &r.out.join("metrics.json"),
        &FoldMetrics {
            method: method.name().to_string(),
            fold: 0,
            ece_bins: r.train.ece_bins,
            metrics: metrics.clone(),
        },
    )?;
    println!(
        "{method}: validation mae_uw {:.4}, ece {:.4} over {} records",
        metrics.mae_uw, metrics.ece, metrics.n_records
    );
    Ok(())
}

fn fmt_agg(a: Option<&harness::Aggregate>) -> String {
    match a {
        Some(harness::Aggregate {
            mean: Some(m),
            std: Some(s),
            ..
        }) => format!("{m:.4} ± {s:.4}"),
        Some(harness::Aggregate { mean: Some(m), .. }) => format!("{m:.4}"),
        _ => "n/a".into(),
    }
}

fn cv(args: CvArgs) -> Result<()> {
    let r = resolve(&args.common)?;
    let list = args
        .methods
        .clone()
        .or_else(|| r.file.methods.as_ref().map(|m| m.join(",")))
        .ok_or_else(|| {
            input(format!(
                "no methods: pass --methods; valid methods: {}",
                Method::valid_names()
            ))
        })?;
    let methods = parse_methods(&list)?;
    let folds = args.folds.or(r.file.folds).unwrap_or(5);
    if folds < 2 {
        return Err(input("folds: need at least 2"));
    }
    if args.jobs == Some(0) {
        return Err(input("jobs: need at least 1"));
    }
    let settings = CvSettings {
        folds,
        split_seed: r.split_seed,
        jobs: args.jobs,
    };
    let results = run_cv_many(&r.dataset, &methods, &r.train, &settings).map_err(|e| {
        if e.is_input_error() {
            as_input(e)
        } else {
            e.into()
        }
    })?;
    let summary = report::write_experiment(&r.out, &results, dataset_info(&r.dataset), &r.train, &settings)
        .with_context(|| format!("writing results to {}", r.out.display()))?;

    for (name, m) in &summary.methods {
        println!(
            "{name}: mae_uw {}  qwk_uw {}  acc_uw {}  ece {}",
            fmt_agg(m.metrics.get("mae_uw")),
            fmt_agg(m.metrics.get("qwk_uw")),
            fmt_agg(m.metrics.get("accuracy_uw")),
            fmt_agg(m.metrics.get("ece")),
        );
    }
    let failed: usize = summary.methods.values().map(|m| m.failed_folds.len()).sum();
    if failed > 0 {
        anyhow::bail!(
            "{failed} fold(s) failed; partial results are in {}",
            r.out.join("summary.json").display()
        );
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    if args.bins == 0 {
        return Err(input("bins: need at least 1"));
    }
    let records = report::read_records(&args.records).map_err(as_input)?;
    let metrics = MetricReport::compute(&records, args.bins).map_err(as_input)?;
    match &args.out {
        Some(path) => report::write_json(path, &metrics)?,
        None => println!("{}", serde_json::to_string_pretty(&metrics)?),
    }
    Ok(())
}

fn read_fold_metrics(dir: &Path) -> Result<Vec<FoldMetrics>> {
    let entries = std::fs::read_dir(dir).map_err(|e| input(format!("cannot read {}: {e}", dir.display())))?;
    let mut folds = Vec::new();
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(i) = name.strip_prefix("fold_").and_then(|n| n.parse::<usize>().ok()) {
            let m: FoldMetrics = report::read_json(&entry.path().join("metrics.json")).map_err(as_input)?;
            folds.push((i, m));
        }
    }
    if folds.is_empty() {
        return Err(input(format!("{} has no fold_<i>/metrics.json", dir.display())));
    }
    folds.sort_by_key(|(i, _)| *i);
    Ok(folds.into_iter().map(|(_, m)| m).collect())
}

fn compare(args: CompareArgs) -> Result<()> {
    let a = read_fold_metrics(&args.a)?;
    let b = read_fold_metrics(&args.b)?;
    let fold_ids = |v: &[FoldMetrics]| v.iter().map(|m| m.fold).collect::<Vec<_>>();
    if fold_ids(&a) != fold_ids(&b) {
        return Err(input(format!(
            "fold structure differs: {:?} vs {:?}",
            fold_ids(&a),
            fold_ids(&b)
        )));
    }
    let alternative = match args.direction {
        DirectionArg::Lower => Alternative::Less,
        DirectionArg::Higher => Alternative::Greater,
    };
    let reports = |v: &[FoldMetrics]| v.iter().map(|m| m.metrics.clone()).collect::<Vec<_>>();
    let cmp = compare_methods(&reports(&a), &reports(&b), &args.metric, alternative).map_err(as_input)?;
    println!("{}", cmp.describe(&a[0].method, &b[0].method));
    if let Some(out) = &args.out {
        report::write_json(out, &cmp)?;
    }
    Ok(())
}

fn curves(args: CurvesArgs) -> Result<()> {
    if args.bins == 0 {
        return Err(input("bins: need at least 1"));
    }
    let records = report::read_records(&args.records).map_err(as_input)?;
    if records.is_empty() {
        return Err(input(format!("{} has no records", args.records.display())));
    }
    report::write_confusion(&args.out.join("confusion.csv"), &records, !args.counts)?;
    report::write_calibration(&args.out.join("calibration.csv"), &records, args.bins)?;
    report::write_risk_coverage(&args.out.join("risk_coverage.csv"), &records)?;
    Ok(())
}
