//! Experiment orchestration: per-method training with validation-based epoch
//! selection, seed ensembles, cross-validated evaluation, and paired
//! significance tests between methods.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{resolve_ties, stratified_k_fold, train_val_split, Dataset, TieHandling, TieResampler, TieStatus};
use crate::error::{Error, Result};
use crate::losses::{LossKind, Reduction, Target};
use crate::metrics::{self, paired_t_test_one_sided, Alternative, EvalRecord, MetricReport};
use crate::model::{
    adam_step, ensemble_predictions, loss_and_gradient, shuffled_indices, Activation, AdamConfig, AdamState,
    EncoderConfig, HeadKind, ModelParams, Prediction, Sample,
};
use crate::ordinal::{decode_argmax, decode_count, HardLabel, TiePolicy};
use crate::rng::{self, Stream};

/// A training method: a loss bound to the head it trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ce,
    CeSoft,
    OrCnn,
    OrSoft,
    Coral,
    CoralSoft,
    Corn,
    SordAe,
    SordSe,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Ce,
        Method::CeSoft,
        Method::OrCnn,
        Method::OrSoft,
        Method::Coral,
        Method::CoralSoft,
        Method::Corn,
        Method::SordAe,
        Method::SordSe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ce => "ce",
            Method::CeSoft => "ce_soft",
            Method::OrCnn => "or_cnn",
            Method::OrSoft => "or_soft",
            Method::Coral => "coral",
            Method::CoralSoft => "coral_soft",
            Method::Corn => "corn",
            Method::SordAe => "sord_ae",
            Method::SordSe => "sord_se",
        }
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            Method::Ce => LossKind::Ce,
            Method::CeSoft => LossKind::CeSoft,
            Method::OrCnn | Method::Coral => LossKind::OrCnn,
            Method::OrSoft | Method::CoralSoft => LossKind::OrSoft,
            Method::Corn => LossKind::Corn,
            Method::SordAe => LossKind::SordAe,
            Method::SordSe => LossKind::SordSe,
        }
    }

    pub fn head_kind(self) -> HeadKind {
        match self {
            Method::Coral | Method::CoralSoft => HeadKind::SharedSlopeBias,
            Method::OrCnn | Method::OrSoft | Method::Corn => HeadKind::Independent,
            Method::Ce | Method::CeSoft | Method::SordAe | Method::SordSe => HeadKind::Softmax,
        }
    }

    pub fn default_decode(self) -> DecodeRule {
        if self.head_kind().is_task_head() {
            DecodeRule::Count
        } else {
            DecodeRule::Argmax
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL.into_iter().find(|m| m.name() == key).ok_or_else(|| {
            Error::invalid(format!(
                "unknown method `{s}`; valid methods: {}",
                Method::valid_names()
            ))
        })
    }
}

/// How a hard prediction is read off a model's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeRule {
    /// One plus the number of subtasks above 0.5.
    Count,
    /// Most probable class, lowest on ties.
    Argmax,
}

impl FromStr for DecodeRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(DecodeRule::Count),
            "argmax" => Ok(DecodeRule::Argmax),
            _ => Err(Error::invalid(format!(
                "unknown decode rule `{s}`; use count or argmax"
            ))),
        }
    }
}

/// Decode a prediction. Counting needs subtask probabilities, so softmax
/// models always decode by argmax.
pub fn decode(prediction: &Prediction, rule: DecodeRule) -> HardLabel {
    match (rule, &prediction.tasks) {
        (DecodeRule::Count, Some(tasks)) => decode_count(tasks),
        _ => decode_argmax(&prediction.dist, TiePolicy::LowestClass).lowest(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Uncertainty-weighted MAE on the validation split.
    #[default]
    UwMae,
    /// Mean training loss on the validation split.
    ValLoss,
}

fn default_epochs() -> usize {
    1000
}
fn default_batch_size() -> usize {
    16
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_bins() -> usize {
    metrics::DEFAULT_BINS
}

/// Training hyperparameters shared by every method in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    /// One model per seed; their predictions are averaged.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub selection: SelectionMetric,
    /// Overrides each method's default decode rule.
    #[serde(default)]
    pub decode: Option<DecodeRule>,
    #[serde(default)]
    pub ties: TieHandling,
    /// Share of each fold's training data kept for fitting; the rest validates.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_bins")]
    pub ece_bins: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            adam: AdamConfig::default(),
            hidden_dims: Vec::new(),
            activation: Activation::default(),
            seeds: default_seeds(),
            selection: SelectionMetric::default(),
            decode: None,
            ties: TieHandling::default(),
            train_fraction: default_train_fraction(),
            ece_bins: default_bins(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must not be empty"));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::invalid("adam.lr must be positive"));
        }
        if self.ece_bins == 0 {
            return Err(Error::invalid("ece_bins must be at least 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden_dims entries must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must lie strictly between 0 and 1"));
        }
        Ok(())
    }

    pub fn decode_rule(&self, method: Method) -> DecodeRule {
        match self.decode {
            Some(rule) if method.head_kind().is_task_head() => rule,
            _ => method.default_decode(),
        }
    }

    pub fn encoder(&self, input_dim: usize) -> EncoderConfig {
        EncoderConfig {
            input_dim,
            hidden_dims: self.hidden_dims.clone(),
            activation: self.activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Selection metric on the validation split; lower is better.
    pub val_metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub method: Method,
    pub seed: u64,
    /// Snapshot from `best_epoch`.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

impl TrainedModel {
    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        self.params.predict(features, self.method.loss_kind().output_kind())
    }
}

/// Predictions of an ensemble on `indices` turned into evaluation records.
/// Examples tied under `TieHandling::Exclude` are left out.
pub fn evaluate_ensemble(
    models: &[TrainedModel],
    dataset: &Dataset,
    indices: &[usize],
    rule: DecodeRule,
    statuses: &[TieStatus],
) -> Result<Vec<EvalRecord>> {
    indices
        .iter()
        .filter(|&&i| !statuses[i].is_tied())
        .map(|&i| {
            let features = &dataset.examples()[i].features;
            let members = models.iter().map(|m| m.predict(features)).collect::<Result<Vec<_>>>()?;
            let pred = ensemble_predictions(&members)?;
            let pred_hard = decode(&pred, rule);
            EvalRecord::new(
                dataset.examples()[i].id.clone(),
                dataset.soft(i).clone(),
                pred.dist,
                pred_hard,
            )
        })
        .collect()
}

fn targets_for_epoch(
    method: Method,
    dataset: &Dataset,
    indices: &[usize],
    statuses: &[TieStatus],
    resampler: &mut TieResampler,
) -> Vec<Target> {
    let kind = method.loss_kind();
    indices
        .iter()
        .map(|&i| {
            let hard = resampler.label(&statuses[i]);
            Target::for_loss(kind, dataset.soft(i), hard)
        })
        .collect()
}

fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite => Error::Diverged { epoch, loss: f64::NAN },
        other => other,
    }
}

/// Train one model and return the parameters from the epoch with the best
/// validation score (earliest on ties).
pub fn train_one(
    method: Method,
    config: &TrainConfig,
    dataset: &Dataset,
    train: &[usize],
    val: &[usize],
    seed: u64,
) -> Result<TrainedModel> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("training and validation sets must be non-empty"));
    }
    let statuses = resolve_ties(dataset, config.ties);
    if val.iter().all(|&i| statuses[i].is_tied()) {
        return Err(Error::invalid("every validation example is tied; nothing to select on"));
    }
    let spec = dataset.spec();
    let kind = method.loss_kind();
    let rule = config.decode_rule(method);
    let encoder = config.encoder(dataset.feature_dim());
    let mut params = ModelParams::init(&encoder, method.head_kind(), spec, seed)?;
    let mut adam = AdamState::new(config.adam, params.len());
    let mut shuffle_rng = rng::stream(seed, Stream::Shuffle);
    let mut resampler = TieResampler::new(seed);

    let features = |i: usize| dataset.examples()[i].features.as_slice();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let targets = targets_for_epoch(method, dataset, train, &statuses, &mut resampler);
        let order = shuffled_indices(train.len(), &mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Sample> = chunk
                .iter()
                .map(|&pos| Sample {
                    features: features(train[pos]),
                    target: &targets[pos],
                })
                .collect();
            let (loss, grad) =
                loss_and_gradient(&params, &batch, kind, spec, Reduction::Mean).map_err(|e| diverged(e, epoch))?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            adam_step(&mut params, &grad, &mut adam)?;
        }
        let train_loss = loss_sum / train.len() as f64;

        let snapshot = TrainedModel {
            method,
            seed,
            params,
            best_epoch: epoch,
            history: Vec::new(),
        };
        let val_metric = match config.selection {
            SelectionMetric::UwMae => {
                let records = evaluate_ensemble(std::slice::from_ref(&snapshot), dataset, val, rule, &statuses)
                    .map_err(|e| diverged(e, epoch))?;
                metrics::mae(&records, true)?
            }
            SelectionMetric::ValLoss => {
                let val_targets = targets_for_epoch(method, dataset, val, &statuses, &mut TieResampler::new(seed));
                let batch: Vec<Sample> = val
                    .iter()
                    .zip(&val_targets)
                    .map(|(&i, t)| Sample {
                        features: features(i),
                        target: t,
                    })
                    .collect();
                loss_and_gradient(&snapshot.params, &batch, kind, spec, Reduction::Mean)
                    .map_err(|e| diverged(e, epoch))?
                    .0
            }
        };
        params = snapshot.params;
        if !val_metric.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: val_metric,
            });
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_metric,
        });
        if best.as_ref().is_none_or(|(b, _, _)| val_metric < *b) {
            best = Some((val_metric, epoch, params.clone()));
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(TrainedModel {
        method,
        seed,
        params,
        best_epoch,
        history,
    })
}

/// How the data are split for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSettings {
    pub folds: usize,
    pub split_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            split_seed: 0,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub report: MetricReport,
    pub records: Vec<EvalRecord>,
    pub models: Vec<TrainedModel>,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    /// `Err` holds the failure message of a fold that could not finish.
    pub outcome: std::result::Result<FoldOutcome, String>,
}

/// Mean and sample standard deviation of a metric over completed folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Folds where the metric was defined.
    pub n: usize,
    pub per_fold: Vec<Option<f64>>,
}

impl Aggregate {
    pub fn from_values(per_fold: Vec<Option<f64>>) -> Self {
        let defined: Vec<f64> = per_fold.iter().flatten().copied().collect();
        let n = defined.len();
        let mean = (n > 0).then(|| defined.iter().sum::<f64>() / n as f64);
        let std = mean
            .filter(|_| n > 1)
            .map(|m| (defined.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Self { mean, std, n, per_fold }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub method: Method,
    pub folds: Vec<FoldResult>,
}

impl ExperimentResult {
    pub fn completed(&self) -> impl Iterator<Item = (usize, &FoldOutcome)> {
        self.folds
            .iter()
            .filter_map(|f| f.outcome.as_ref().ok().map(|o| (f.fold, o)))
    }

    pub fn failed_folds(&self) -> Vec<usize> {
        self.folds
            .iter()
            .filter(|f| f.outcome.is_err())
            .map(|f| f.fold)
            .collect()
    }

    pub fn is_partial(&self) -> bool {
        !self.failed_folds().is_empty()
    }

    pub fn reports(&self) -> Vec<MetricReport> {
        self.completed().map(|(_, o)| o.report.clone()).collect()
    }

    /// Per-metric aggregates over completed folds, in the report's metric order.
    pub fn summary(&self) -> BTreeMap<String, Aggregate> {
        MetricReport::metric_names()
            .into_iter()
            .map(|name| {
                let values = self.completed().map(|(_, o)| o.report.get(name).flatten()).collect();
                (name.to_string(), Aggregate::from_values(values))
            })
            .collect()
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::invalid(format!("cannot start {n} worker threads: {e}"))),
    }
}

/// Train every `(fold, seed)` model, ensemble per fold and evaluate on the
/// fold's test set. Jobs may run in parallel; results are reduced in fold
/// order, so output does not depend on scheduling.
pub fn run_cv(dataset: &Dataset, method: Method, config: &TrainConfig, cv: &CvSettings) -> Result<ExperimentResult> {
    let mut results = run_cv_many(dataset, &[method], config, cv)?;
    Ok(results.remove(0))
}

/// [`run_cv`] for several methods on a shared split, scheduling all jobs together.
pub fn run_cv_many(
    dataset: &Dataset,
    methods: &[Method],
    config: &TrainConfig,
    cv: &CvSettings,
) -> Result<Vec<ExperimentResult>> {
    config.validate()?;
    let labels = dataset.hard_labels();
    let split = stratified_k_fold(&labels, cv.folds, cv.split_seed)?;
    let statuses = resolve_ties(dataset, config.ties);
    let fold_sets: Vec<(Vec<usize>, Vec<usize>)> = (0..split.num_folds())
        .map(|f| {
            train_val_split(
                &split.train_indices(f),
                &labels,
                config.train_fraction,
                cv.split_seed.wrapping_add(f as u64),
            )
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(Method, usize, u64)> = methods
        .iter()
        .flat_map(|&m| (0..split.num_folds()).flat_map(move |f| config.seeds.iter().map(move |&s| (m, f, s))))
        .collect();
    let trained: Vec<Result<TrainedModel>> = with_pool(cv.jobs, || {
        jobs.par_iter()
            .map(|&(m, f, s)| train_one(m, config, dataset, &fold_sets[f].0, &fold_sets[f].1, s))
            .collect()
    })?;

    let mut trained = trained.into_iter();
    let mut results = Vec::with_capacity(methods.len());
    for &method in methods {
        let mut folds = Vec::with_capacity(split.num_folds());
        for fold in 0..split.num_folds() {
            let models: Vec<Result<TrainedModel>> = trained.by_ref().take(config.seeds.len()).collect();
            let outcome = models
                .into_iter()
                .collect::<Result<Vec<_>>>()
                .and_then(|models| {
                    let records = evaluate_ensemble(
                        &models,
                        dataset,
                        split.test_indices(fold),
                        config.decode_rule(method),
                        &statuses,
                    )?;
                    let report = MetricReport::compute(&records, config.ece_bins)?;
                    Ok(FoldOutcome {
                        report,
                        records,
                        models,
                    })
                })
                .map_err(|e| {
                    log::warn!("{method} fold {fold} failed: {e}");
                    e.to_string()
                });
            folds.push(FoldResult { fold, outcome });
        }
        let result = ExperimentResult { method, folds };
        if result.is_partial() {
            log::warn!(
                "{method}: aggregating over {} of {} folds",
                result.completed().count(),
                split.num_folds()
            );
        }
        results.push(result);
    }
    Ok(results)
}

/// Outcome of a paired one-sided test between two methods on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub alternative: Alternative,
    pub n_folds: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub p_value: f64,
    pub significant: bool,
}

impl Comparison {
    /// A one-line verdict such as `a achieves significantly lower ece than b (p = 0.025)`.
    pub fn describe(&self, name_a: &str, name_b: &str) -> String {
        let direction = match self.alternative {
            Alternative::Greater => "higher",
            Alternative::Less => "lower",
        };
        let verdict = if self.significant {
            "significantly"
        } else {
            "not significantly"
        };
        format!(
            "{name_a} achieves {verdict} {direction} {} than {name_b} (p = {:.3})",
            self.metric, self.p_value
        )
    }
}

/// Paired one-sided test of `metric` across matching folds.
pub fn compare_methods(
    a: &[MetricReport],
    b: &[MetricReport],
    metric: &str,
    alternative: Alternative,
) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "fold counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let values = |reports: &[MetricReport]| -> Result<Vec<f64>> {
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(metric)
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "unknown metric `{metric}`; valid metrics: {}",
                            MetricReport::metric_names().join(", ")
                        ))
                    })?
                    .ok_or_else(|| Error::invalid(format!("{metric} is undefined on fold {i}")))
            })
            .collect()
    };
    let (va, vb) = (values(a)?, values(b)?);
    let p_value = paired_t_test_one_sided(&va, &vb, alternative)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(Comparison {
        metric: metric.to_string(),
        alternative,
        n_folds: va.len(),
        mean_a: mean(&va),
        mean_b: mean(&vb),
        p_value,
        significant: p_value < metrics::significance::ALPHA,
    })
}
