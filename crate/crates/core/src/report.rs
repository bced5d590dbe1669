//! On-disk artifacts: per-record predictions, fold metrics, training
//! histories, curve tables and the experiment summary.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! crash never leaves a truncated artifact behind.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{Aggregate, CvSettings, ExperimentResult, TrainConfig, TrainedModel};
use crate::metrics::{self, EvalRecord, MetricReport};
use crate::ordinal::{ClassDistribution, HardLabel, RatingDistribution};

/// Write `bytes` to `path` atomically, creating parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}

fn write_csv_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_atomic(path, &csv_bytes(&header, rows)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Write evaluation records. Floats use Rust's shortest round-trip form, so
/// [`read_records`] recovers them bit for bit.
pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let k = records.first().map_or(0, EvalRecord::num_classes);
    let mut header: Vec<String> = ["id", "hard", "pred_hard", "weight"].map(String::from).to_vec();
    header.extend((1..=k).map(|c| format!("soft_{c}")));
    header.extend((1..=k).map(|c| format!("pred_{c}")));
    let rows = records.iter().map(|r| {
        let mut row = vec![
            r.id.clone(),
            r.hard.to_string(),
            r.pred_hard.to_string(),
            r.weight.to_string(),
        ];
        row.extend(r.soft.as_slice().iter().map(f64::to_string));
        row.extend(r.pred_dist.as_slice().iter().map(f64::to_string));
        row
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// Read records written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let csv_err = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => csv_err(1, format!("{other:?}")),
    })?;
    let header = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let k = header.iter().filter(|h| h.starts_with("soft_")).count();
    let soft_cols: Option<Vec<usize>> = (1..=k).map(|c| col(&format!("soft_{c}"))).collect();
    let pred_cols: Option<Vec<usize>> = (1..=k).map(|c| col(&format!("pred_{c}"))).collect();
    let (Some(id_col), Some(pred_hard_col), Some(soft_cols), Some(pred_cols)) =
        (col("id"), col("pred_hard"), soft_cols, pred_cols)
    else {
        return Err(csv_err(
            1,
            "expected columns id, pred_hard, soft_1..soft_K and pred_1..pred_K".into(),
        ));
    };
    if k < 2 {
        return Err(csv_err(1, "records need at least two classes".into()));
    }

    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let line = row as u64 + 2;
        let rec = result.map_err(|e| csv_err(line, e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            let field = rec.get(c).unwrap_or("").trim();
            field
                .parse::<f64>()
                .map_err(|_| csv_err(line, format!("`{field}` in column {} is not a number", &header[c])))
        };
        let soft: Vec<f64> = soft_cols.iter().map(|&c| num(c)).collect::<Result<_>>()?;
        let pred: Vec<f64> = pred_cols.iter().map(|&c| num(c)).collect::<Result<_>>()?;
        let pred_hard_field = rec.get(pred_hard_col).unwrap_or("").trim();
        let pred_hard = pred_hard_field
            .parse::<usize>()
            .ok()
            .and_then(|c| HardLabel::new(c, k).ok())
            .ok_or_else(|| csv_err(line, format!("pred_hard `{pred_hard_field}` is not a class in 1..={k}")))?;
        let soft = RatingDistribution::new(soft).map_err(|e| csv_err(line, e.to_string()))?;
        let pred = ClassDistribution::new(pred).map_err(|e| csv_err(line, e.to_string()))?;
        let id = rec.get(id_col).unwrap_or("").to_string();
        records.push(EvalRecord::new(id, soft, pred, pred_hard).map_err(|e| csv_err(line, e.to_string()))?);
    }
    Ok(records)
}

/// Contents of a fold's `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub method: String,
    pub fold: usize,
    pub ece_bins: usize,
    pub metrics: MetricReport,
}

pub fn write_confusion(path: &Path, records: &[EvalRecord], row_normalize: bool) -> Result<()> {
    let cm = metrics::confusion_matrix(records, row_normalize)?;
    let k = cm.cells.len();
    let mut header = vec!["true".to_string()];
    header.extend((1..=k).map(|c| format!("pred_{c}")));
    let rows = cm.cells.iter().enumerate().map(|(i, row)| {
        std::iter::once((i + 1).to_string())
            .chain(row.iter().map(f64::to_string))
            .collect()
    });
    write_atomic(path, &csv_bytes(&header, rows)?)
}

pub fn write_calibration(path: &Path, records: &[EvalRecord], bins: usize) -> Result<()> {
    let curve = metrics::calibration_curve(records, bins)?;
    write_csv_table(
        path,
        &["lower", "upper", "count", "mean_confidence", "mean_accuracy"],
        curve.iter().map(|b| {
            vec![
                b.lower.to_string(),
                b.upper.to_string(),
                b.count.to_string(),
                opt(b.mean_confidence),
                opt(b.mean_accuracy),
            ]
        }),
    )
}

pub fn write_risk_coverage(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let curve = metrics::risk_coverage(records)?;
    write_csv_table(
        path,
        &["coverage", "risk"],
        curve.iter().map(|p| vec![p.coverage.to_string(), p.risk.to_string()]),
    )
}

/// Confusion, calibration and risk-coverage tables for one record set.
pub fn write_curves(dir: &Path, records: &[EvalRecord], bins: usize) -> Result<()> {
    write_confusion(&dir.join("confusion.csv"), records, true)?;
    write_calibration(&dir.join("calibration.csv"), records, bins)?;
    write_risk_coverage(&dir.join("risk_coverage.csv"), records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub created_unix_secs: u64,
}

impl Meta {
    pub fn now() -> Self {
        Self {
            tool: "ordreg".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created_unix_secs: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub n_examples: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedFold {
    pub fold: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub completed_folds: Vec<usize>,
    pub failed_folds: Vec<FailedFold>,
    /// True when some folds failed and aggregates cover the rest only.
    pub partial: bool,
    /// Selected epoch per fold, one entry per seed.
    pub best_epochs: Vec<Vec<usize>>,
    pub metrics: BTreeMap<String, Aggregate>,
}

impl MethodSummary {
    pub fn from_result(result: &ExperimentResult) -> Self {
        Self {
            completed_folds: result.completed().map(|(f, _)| f).collect(),
            failed_folds: result
                .folds
                .iter()
                .filter_map(|f| {
                    f.outcome.as_ref().err().map(|e| FailedFold {
                        fold: f.fold,
                        error: e.clone(),
                    })
                })
                .collect(),
            partial: result.is_partial(),
            best_epochs: result
                .completed()
                .map(|(_, o)| o.models.iter().map(|m| m.best_epoch).collect())
                .collect(),
            metrics: result.summary(),
        }
    }
}

/// Contents of `summary.json`. Everything except `meta` is a deterministic
/// function of data, configuration and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub meta: Meta,
    pub dataset: DatasetInfo,
    pub config: TrainConfig,
    pub cv: CvSettings,
    pub methods: BTreeMap<String, MethodSummary>,
    pub notes: BTreeMap<String, String>,
}

pub fn metric_notes() -> BTreeMap<String, String> {
    [
        (
            "coverage_error",
            "average rank of the lowest-ranked class any rater chose, counting every class scored at least as high; 1 is best",
        ),
        (
            "auc",
            "macro one-vs-rest AUROC against the majority label, skipping classes absent from a fold",
        ),
        (
            "ece",
            "equal-width confidence bins over (0, 1]; a record's accuracy is the vote share of its predicted class",
        ),
        ("std", "sample standard deviation across completed folds"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// One method's point on the MAE versus calibration plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub method: String,
    pub mae_uw: Option<f64>,
    pub ece: Option<f64>,
}

pub fn tradeoff_points(summary: &Summary) -> Vec<TradeoffPoint> {
    summary
        .methods
        .iter()
        .map(|(name, m)| TradeoffPoint {
            method: name.clone(),
            mae_uw: m.metrics.get("mae_uw").and_then(|a| a.mean),
            ece: m.metrics.get("ece").and_then(|a| a.mean),
        })
        .collect()
}

pub fn write_tradeoff(path: &Path, points: &[TradeoffPoint]) -> Result<()> {
    write_csv_table(
        path,
        &["method", "mae_uw", "ece"],
        points.iter().map(|p| vec![p.method.clone(), opt(p.mae_uw), opt(p.ece)]),
    )
}

/// Per-epoch training curves of several models, one row per (seed, epoch).
pub fn write_history(path: &Path, models: &[TrainedModel]) -> Result<()> {
    write_csv_table(
        path,
        &["seed", "epoch", "train_loss", "val_metric", "selected"],
        models.iter().flat_map(|m| {
            m.history.iter().map(move |h| {
                vec![
                    m.seed.to_string(),
                    h.epoch.to_string(),
                    h.train_loss.to_string(),
                    h.val_metric.to_string(),
                    u8::from(h.epoch == m.best_epoch).to_string(),
                ]
            })
        }),
    )
}

pub fn fold_dir(out: &Path, method: &str, fold: usize) -> PathBuf {
    out.join(method).join(format!("fold_{fold}"))
}

/// Write the full results tree:
/// `<out>/<method>/fold_<i>/{metrics.json,records.csv,history.csv,...}`,
/// `<out>/summary.json` and `<out>/tradeoff.csv`.
pub fn write_experiment(
    out: &Path,
    results: &[ExperimentResult],
    dataset: DatasetInfo,
    config: &TrainConfig,
    cv: &CvSettings,
) -> Result<Summary> {
    for result in results {
        let name = result.method.name();
        for (fold, outcome) in result.completed() {
            let dir = fold_dir(out, name, fold);
            write_json(
                &dir.join("metrics.json"),
                &FoldMetrics {
                    method: name.to_string(),
                    fold,
                    ece_bins: config.ece_bins,
                    metrics: outcome.report.clone(),
                },
            )?;
            write_records(&dir.join("records.csv"), &outcome.records)?;
            write_history(&dir.join("history.csv"), &outcome.models)?;
            write_curves(&dir, &outcome.records, config.ece_bins)?;
        }
    }
    let summary = Summary {
        meta: Meta::now(),
        dataset,
        config: config.clone(),
        cv: *cv,
        methods: results
            .iter()
            .map(|r| (r.method.name().to_string(), MethodSummary::from_result(r)))
            .collect(),
        notes: metric_notes(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_tradeoff(&out.join("tradeoff.csv"), &tradeoff_points(&summary))?;
    Ok(summary)
}
