//! Evaluation over collections of [`EvalRecord`]s.
//!
//! Each record pairs an example's annotator distribution with a prediction.
//! Uncertainty-weighted (UW) variants weight example `i` by `w_i`, the
//! fraction of annotators that chose its mode label. Calibration compares the
//! model's top-class probability with `soft[pred_hard]`, the fraction of
//! annotators who agree with the prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::{hard_label_from_soft, ClassDistribution, HardLabel, RatingDistribution, TiePolicy};

pub mod significance;

pub use significance::{paired_t_test_one_sided, Alternative};

/// Default number of equal-width confidence bins for ECE and calibration curves.
pub const DEFAULT_BINS: usize = 10;

/// One evaluated example.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub soft: RatingDistribution,
    /// Mode of `soft`.
    pub hard: HardLabel,
    pub pred_dist: ClassDistribution,
    pub pred_hard: HardLabel,
    /// Annotator agreement on the mode, `max(soft)`.
    pub weight: f64,
}

impl EvalRecord {
    /// Derives `hard` (lowest class on an exact tie) and `weight` from `soft`.
    pub fn new(
        id: impl Into<String>,
        soft: RatingDistribution,
        pred_dist: ClassDistribution,
        pred_hard: HardLabel,
    ) -> Result<Self> {
        let k = soft.num_classes();
        if pred_dist.num_classes() != k {
            return Err(Error::invalid(format!(
                "soft label has {k} classes, prediction has {}",
                pred_dist.num_classes()
            )));
        }
        if pred_hard.get() > k {
            return Err(Error::invalid(format!("prediction {pred_hard} is outside 1..={k}")));
        }
        let hard = hard_label_from_soft(&soft, TiePolicy::LowestClass).lowest();
        Ok(Self {
            id: id.into(),
            weight: soft.max_prob(),
            soft,
            hard,
            pred_dist,
            pred_hard,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.soft.num_classes()
    }

    /// Classes at least one annotator chose.
    pub fn rater_classes(&self) -> impl Iterator<Item = HardLabel> + '_ {
        self.soft.support()
    }

    pub fn is_rater_class(&self, label: HardLabel) -> bool {
        self.soft.prob(label) > 0.0
    }

    pub fn confidence(&self) -> f64 {
        self.pred_dist.confidence()
    }

    pub fn abs_error(&self) -> f64 {
        self.pred_hard.get().abs_diff(self.hard.get()) as f64
    }

    pub fn is_correct(&self) -> bool {
        self.pred_hard == self.hard
    }
}

fn require_records(records: &[EvalRecord]) -> Result<usize> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("no records to evaluate"))?;
    let k = first.num_classes();
    if records.iter().any(|r| r.num_classes() != k) {
        return Err(Error::invalid("records disagree on the number of classes"));
    }
    Ok(k)
}

/// `Σ w_i m_i / Σ w_i`, or the plain mean when `use_weights` is false.
pub fn weighted_metric_mean(
    records: &[EvalRecord],
    metric: impl Fn(&EvalRecord) -> f64,
    use_weights: bool,
) -> Result<f64> {
    require_records(records)?;
    let (num, den) = records.iter().fold((0.0, 0.0), |(num, den), r| {
        let w = if use_weights { r.weight } else { 1.0 };
        (num + w * metric(r), den + w)
    });
    Ok(num / den)
}

pub fn mae(records: &[EvalRecord], use_weights: bool) -> Result<f64> {
    weighted_metric_mean(records, EvalRecord::abs_error, use_weights)
}

pub fn accuracy(records: &[EvalRecord], use_weights: bool) -> Result<f64> {
    weighted_metric_mean(records, |r| if r.is_correct() { 1.0 } else { 0.0 }, use_weights)
}

/// Quadratic weighted kappa of predictions against mode labels.
///
/// With `use_weights`, each example adds `w_i` (rather than 1) to its cell of
/// the label x prediction table. `None` when the expected disagreement is zero.
pub fn qwk(records: &[EvalRecord], use_weights: bool) -> Result<Option<f64>> {
    let k = require_records(records)?;
    if records.len() < 2 {
        return Err(Error::invalid("QWK needs at least two records"));
    }
    let mut observed = vec![vec![0.0; k]; k];
    for r in records {
        let w = if use_weights { r.weight } else { 1.0 };
        observed[r.hard.index()][r.pred_hard.index()] += w;
    }
    Ok(kappa_from_table(&observed))
}

/// `1 - Σ ω O / Σ ω E` with `ω_ij = (i-j)²`; the `(K-1)²` normalisation of ω
/// cancels in the ratio and is left out.
pub(crate) fn kappa_from_table(observed: &[Vec<f64>]) -> Option<f64> {
    let k = observed.len();
    let rows: Vec<f64> = observed.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..k).map(|j| observed.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = rows.iter().sum();
    let mut disagree = 0.0;
    let mut expected = 0.0;
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64) - (j as f64)).powi(2);
            disagree += w * observed[i][j];
            expected += w * rows[i] * cols[j];
        }
    }
    if expected == 0.0 {
        return None;
    }
    Some(1.0 - disagree * total / expected)
}

/// Fraction of predictions matching at least one annotator.
pub fn any_rater_accuracy(records: &[EvalRecord]) -> Result<f64> {
    weighted_metric_mean(
        records,
        |r| if r.is_rater_class(r.pred_hard) { 1.0 } else { 0.0 },
        false,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_confidence: Option<f64>,
    pub mean_accuracy: Option<f64>,
}

/// Equal-width confidence bins over (0, 1]; bin `b` holds `(b/B, (b+1)/B]`.
pub fn calibration_curve(records: &[EvalRecord], num_bins: usize) -> Result<Vec<CalibrationBin>> {
    require_records(records)?;
    if num_bins == 0 {
        return Err(Error::invalid("need at least one calibration bin"));
    }
    let mut conf = vec![0.0; num_bins];
    let mut acc = vec![0.0; num_bins];
    let mut count = vec![0usize; num_bins];
    for r in records {
        let c = r.confidence();
        let b = ((c * num_bins as f64).ceil() as usize).clamp(1, num_bins) - 1;
        conf[b] += c;
        acc[b] += r.soft.prob(r.pred_hard);
        count[b] += 1;
    }
    Ok((0..num_bins)
        .map(|b| {
            let n = count[b];
            let mean = |s: f64| (n > 0).then(|| s / n as f64);
            CalibrationBin {
                lower: b as f64 / num_bins as f64,
                upper: (b + 1) as f64 / num_bins as f64,
                count: n,
                mean_confidence: mean(conf[b]),
                mean_accuracy: mean(acc[b]),
            }
        })
        .collect())
}

/// Count-weighted mean gap between confidence and soft-label accuracy per bin.
pub fn ece(records: &[EvalRecord], num_bins: usize) -> Result<f64> {
    let bins = calibration_curve(records, num_bins)?;
    let n = records.len() as f64;
    Ok(bins
        .iter()
        .filter_map(|b| {
            let (c, a) = (b.mean_confidence?, b.mean_accuracy?);
            Some(b.count as f64 / n * (c - a).abs())
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskCoveragePoint {
    pub coverage: f64,
    pub risk: f64,
}

/// Risk (UW error) among the `n` most confident predictions, for n = 1..N.
/// Confidence ties keep input order.
pub fn risk_coverage(records: &[EvalRecord]) -> Result<Vec<RiskCoveragePoint>> {
    require_records(records)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[b].confidence().total_cmp(&records[a].confidence()));
    let n = records.len() as f64;
    let mut hit = 0.0;
    let mut mass = 0.0;
    Ok(order
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            let r = &records[idx];
            mass += r.weight;
            if r.is_correct() {
                hit += r.weight;
            }
            RiskCoveragePoint {
                coverage: (i + 1) as f64 / n,
                risk: 1.0 - hit / mass,
            }
        })
        .collect())
}

/// Mean risk over all coverage levels.
pub fn aurc(records: &[EvalRecord]) -> Result<f64> {
    let curve = risk_coverage(records)?;
    Ok(curve.iter().map(|p| p.risk).sum::<f64>() / curve.len() as f64)
}

/// Mean squared distance between prediction and soft label.
pub fn brier(records: &[EvalRecord]) -> Result<f64> {
    weighted_metric_mean(
        records,
        |r| {
            r.pred_dist
                .as_slice()
                .iter()
                .zip(r.soft.as_slice())
                .map(|(p, s)| (p - s).powi(2))
                .sum()
        },
        false,
    )
}

/// Mean cross entropy of predictions against soft labels.
pub fn cross_entropy_metric(records: &[EvalRecord]) -> Result<f64> {
    weighted_metric_mean(records, |r| crate::losses::ce_soft_loss(&r.pred_dist, &r.soft), false)
}

/// Mean over examples of how far down the predicted ranking one must go to
/// cover every class an annotator chose. A class's rank counts every class
/// scored at least as high.
pub fn coverage_error(records: &[EvalRecord]) -> Result<f64> {
    weighted_metric_mean(
        records,
        |r| {
            let p = r.pred_dist.as_slice();
            r.rater_classes()
                .map(|c| p.iter().filter(|q| **q >= p[c.index()]).count())
                .max()
                .unwrap_or(0) as f64
        },
        false,
    )
}

/// Binary AUROC by the rank-sum statistic; ties count one half.
pub fn binary_auroc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let pos_rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// One-vs-rest AUROC per class, macro-averaged over classes with both
/// positives and negatives among the mode labels.
pub fn auroc_macro(records: &[EvalRecord]) -> Result<Option<f64>> {
    let k = require_records(records)?;
    let per_class: Vec<f64> = (0..k)
        .filter_map(|c| {
            let scores: Vec<f64> = records.iter().map(|r| r.pred_dist.as_slice()[c]).collect();
            let labels: Vec<bool> = records.iter().map(|r| r.hard.index() == c).collect();
            binary_auroc(&scores, &labels)
        })
        .collect();
    Ok((!per_class.is_empty()).then(|| per_class.iter().sum::<f64>() / per_class.len() as f64))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Spearman correlation of predicted and mode classes; `None` if either is constant.
pub fn spearman(records: &[EvalRecord]) -> Result<Option<f64>> {
    require_records(records)?;
    let pred: Vec<f64> = records.iter().map(|r| r.pred_hard.get() as f64).collect();
    let truth: Vec<f64> = records.iter().map(|r| r.hard.get() as f64).collect();
    Ok(pearson(&average_ranks(&pred), &average_ranks(&truth)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `cells[true][pred]`, counts or row fractions.
    pub cells: Vec<Vec<f64>>,
    /// True classes with no records; their rows are all zero.
    pub absent_classes: Vec<HardLabel>,
}

pub fn confusion_matrix(records: &[EvalRecord], row_normalize: bool) -> Result<ConfusionMatrix> {
    let k = require_records(records)?;
    let mut cells = vec![vec![0.0; k]; k];
    for r in records {
        cells[r.hard.index()][r.pred_hard.index()] += 1.0;
    }
    let absent_classes = (0..k)
        .filter(|i| cells[*i].iter().all(|c| *c == 0.0))
        .map(HardLabel::from_index)
        .collect();
    if row_normalize {
        for row in &mut cells {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|c| *c /= total);
            }
        }
    }
    Ok(ConfusionMatrix { cells, absent_classes })
}

/// All scalar metrics for one evaluation set. Undefined values are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_records: usize,
    pub mae: f64,
    pub mae_uw: f64,
    pub qwk: Option<f64>,
    pub qwk_uw: Option<f64>,
    pub accuracy: f64,
    pub accuracy_uw: f64,
    pub accuracy_ar: f64,
    pub ece: f64,
    pub aurc: f64,
    pub brier: f64,
    pub cross_entropy: f64,
    pub coverage_error: f64,
    pub auc: Option<f64>,
    pub spearman: Option<f64>,
}

impl MetricReport {
    pub fn compute(records: &[EvalRecord], num_bins: usize) -> Result<Self> {
        let qwk_defined = |uw| -> Result<Option<f64>> {
            if records.len() < 2 {
                Ok(None)
            } else {
                qwk(records, uw)
            }
        };
        Ok(Self {
            n_records: records.len(),
            mae: mae(records, false)?,
            mae_uw: mae(records, true)?,
            qwk: qwk_defined(false)?,
            qwk_uw: qwk_defined(true)?,
            accuracy: accuracy(records, false)?,
            accuracy_uw: accuracy(records, true)?,
            accuracy_ar: any_rater_accuracy(records)?,
            ece: ece(records, num_bins)?,
            aurc: aurc(records)?,
            brier: brier(records)?,
            cross_entropy: cross_entropy_metric(records)?,
            coverage_error: coverage_error(records)?,
            auc: auroc_macro(records)?,
            spearman: spearman(records)?,
        })
    }

    /// Metric names and values in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("mae", Some(self.mae)),
            ("mae_uw", Some(self.mae_uw)),
            ("qwk", self.qwk),
            ("qwk_uw", self.qwk_uw),
            ("accuracy", Some(self.accuracy)),
            ("accuracy_uw", Some(self.accuracy_uw)),
            ("accuracy_ar", Some(self.accuracy_ar)),
            ("ece", Some(self.ece)),
            ("aurc", Some(self.aurc)),
            ("brier", Some(self.brier)),
            ("cross_entropy", Some(self.cross_entropy)),
            ("coverage_error", Some(self.coverage_error)),
            ("auc", self.auc),
            ("spearman", self.spearman),
        ]
    }

    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.entries().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    pub fn metric_names() -> Vec<&'static str> {
        vec![
            "mae",
            "mae_uw",
            "qwk",
            "qwk_uw",
            "accuracy",
            "accuracy_uw",
            "accuracy_ar",
            "ece",
            "aurc",
            "brier",
            "cross_entropy",
            "coverage_error",
            "auc",
            "spearman",
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(c: usize) -> HardLabel {
        HardLabel::from_index(c - 1)
    }

    fn record(soft: &[f64], pred: &[f64], pred_hard: usize) -> EvalRecord {
        EvalRecord::new(
            "",
            RatingDistribution::new(soft.to_vec()).unwrap(),
            ClassDistribution::new(pred.to_vec()).unwrap(),
            label(pred_hard),
        )
        .unwrap()
    }

    fn one_hot(k: usize, c: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[c - 1] = 1.0;
        v
    }

    /// Record with one-hot soft label `truth`, predicted class `pred` at confidence `conf`.
    fn simple(k: usize, truth: usize, pred: usize, conf: f64) -> EvalRecord {
        let rest = (1.0 - conf) / (k - 1) as f64;
        let mut p = vec![rest; k];
        p[pred - 1] = conf;
        record(&one_hot(k, truth), &p, pred)
    }

    #[test]
    fn weighted_mae_example() {
        let a = record(&[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 2);
        let b = record(&[0.5, 0.0, 0.0, 0.5], &[0.0, 0.0, 1.0, 0.0], 3);
        assert_eq!(b.hard.get(), 1);
        assert_eq!(b.weight, 0.5);
        let v = mae(&[a.clone(), b.clone()], true).unwrap();
        assert!((v - 1.0 / 1.5).abs() < 1e-15);
        assert_eq!(mae(&[a, b], false).unwrap(), 1.0);
        assert!(mae(&[], true).is_err());
    }

    #[test]
    fn accuracy_with_all_correct_is_one() {
        let recs = vec![
            record(&[0.2, 0.8], &[0.3, 0.7], 2),
            record(&[2.0 / 3.0, 1.0 / 3.0], &[0.9, 0.1], 1),
        ];
        assert_eq!(accuracy(&recs, true).unwrap(), 1.0);
    }

    #[test]
    fn qwk_examples() {
        let perfect: Vec<_> = (1..=4).map(|c| simple(4, c, c, 0.7)).collect();
        assert_eq!(qwk(&perfect, false).unwrap(), Some(1.0));

        let reversed: Vec<_> = (1..=4).map(|c| simple(4, c, 5 - c, 0.7)).collect();
        assert_eq!(qwk(&reversed, false).unwrap(), Some(-1.0));

        assert_eq!(qwk(&reversed, true).unwrap(), qwk(&reversed, false).unwrap());

        let constant: Vec<_> = (0..3).map(|_| simple(4, 2, 2, 0.7)).collect();
        assert_eq!(qwk(&constant, false).unwrap(), None);
        assert!(qwk(&constant[..1], false).is_err());
    }

    #[test]
    fn any_rater_examples() {
        let t = 1.0 / 3.0;
        let hit = record(&[t, t, t, 0.0], &[0.1, 0.6, 0.2, 0.1], 2);
        let miss = record(&[t, t, t, 0.0], &[0.1, 0.1, 0.2, 0.6], 4);
        assert_eq!(any_rater_accuracy(std::slice::from_ref(&hit)).unwrap(), 1.0);
        assert_eq!(any_rater_accuracy(&[miss]).unwrap(), 0.0);
        let hard: Vec<_> = [(1, 1), (2, 3), (3, 3)]
            .iter()
            .map(|(t, p)| simple(3, *t, *p, 0.6))
            .collect();
        assert_eq!(any_rater_accuracy(&hard).unwrap(), accuracy(&hard, false).unwrap());
    }

    #[test]
    fn ece_examples() {
        let oracle = vec![
            record(&[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3], 2),
            record(&[1.0 / 3.0, 2.0 / 3.0, 0.0], &[1.0 / 3.0, 2.0 / 3.0, 0.0], 2),
        ];
        assert_eq!(ece(&oracle, 10).unwrap(), 0.0);

        let one = record(&[0.5, 0.5], &[0.9, 0.1], 1);
        assert!((ece(&[one], 1).unwrap() - 0.4).abs() < 1e-15);

        let perfect: Vec<_> = (1..=3).map(|c| record(&one_hot(3, c), &one_hot(3, c), c)).collect();
        assert_eq!(ece(&perfect, 10).unwrap(), 0.0);
        assert!(ece(&perfect, 0).is_err());
    }

    #[test]
    fn calibration_curve_tables() {
        let one = record(&[0.5, 0.5], &[0.9, 0.1], 1);
        let bins = calibration_curve(std::slice::from_ref(&one), 1).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[0].mean_confidence, Some(0.9));
        assert_eq!(bins[0].mean_accuracy, Some(0.5));

        let bins = calibration_curve(&[one], 10).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 1);
        assert_eq!(bins[8].count, 1);
        assert!(bins[0].mean_confidence.is_none());

        let perfect: Vec<_> = (1..=2).map(|c| record(&one_hot(2, c), &one_hot(2, c), c)).collect();
        let bins = calibration_curve(&perfect, 4).unwrap();
        assert_eq!(bins[3].count, 2);
        assert_eq!(bins[3].mean_confidence, bins[3].mean_accuracy);
    }

    #[test]
    fn aurc_examples() {
        let right = simple(2, 1, 1, 0.9);
        let wrong = simple(2, 1, 2, 0.6);
        let curve = risk_coverage(&[right.clone(), wrong.clone()]).unwrap();
        assert_eq!(
            curve[0],
            RiskCoveragePoint {
                coverage: 0.5,
                risk: 0.0
            }
        );
        assert_eq!(
            curve[1],
            RiskCoveragePoint {
                coverage: 1.0,
                risk: 0.5
            }
        );
        assert_eq!(aurc(&[right, wrong]).unwrap(), 0.25);

        let wrong_confident = simple(2, 1, 2, 0.9);
        let right_unsure = simple(2, 1, 1, 0.6);
        assert_eq!(aurc(&[wrong_confident, right_unsure]).unwrap(), 0.75);

        let all_right: Vec<_> = (1..=3).map(|c| simple(3, c, c, 0.5 + 0.1 * c as f64)).collect();
        assert_eq!(aurc(&all_right).unwrap(), 0.0);
    }

    #[test]
    fn risk_coverage_ties_keep_input_order() {
        let right = simple(2, 1, 1, 0.7);
        let wrong = simple(2, 1, 2, 0.7);
        let a = risk_coverage(&[right.clone(), wrong.clone()]).unwrap();
        let b = risk_coverage(&[wrong, right]).unwrap();
        assert_eq!(a[0].risk, 0.0);
        assert_eq!(b[0].risk, 1.0);
    }

    #[test]
    fn brier_and_cross_entropy_examples() {
        let soft = [0.2, 0.5, 0.3];
        let same = record(&soft, &soft, 2);
        assert_eq!(brier(std::slice::from_ref(&same)).unwrap(), 0.0);
        let entropy = -soft.iter().map(|p: &f64| p * p.ln()).sum::<f64>();
        assert!((cross_entropy_metric(&[same]).unwrap() - entropy).abs() < 1e-15);

        let half = record(&[1.0, 0.0], &[0.5, 0.5], 1);
        assert_eq!(brier(std::slice::from_ref(&half)).unwrap(), 0.5);
        assert!((cross_entropy_metric(&[half]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);

        let wrong = record(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 2);
        assert_eq!(brier(&[wrong]).unwrap(), 2.0);
    }

    #[test]
    fn coverage_auc_spearman_examples() {
        let recs: Vec<_> = (1..=3).map(|c| simple(3, c, c, 0.8)).collect();
        assert_eq!(coverage_error(&recs).unwrap(), 1.0);
        let t = 1.0 / 3.0;
        let spread = record(&[t, t, t], &[0.5, 0.3, 0.2], 1);
        assert_eq!(coverage_error(&[spread]).unwrap(), 3.0);

        assert_eq!(
            binary_auroc(&[0.1, 0.4, 0.35, 0.8], &[false, true, false, true]),
            Some(1.0)
        );
        assert_eq!(binary_auroc(&[0.5, 0.5], &[false, true]), Some(0.5));
        assert_eq!(binary_auroc(&[0.5, 0.6], &[true, true]), None);
        assert_eq!(auroc_macro(&recs).unwrap(), Some(1.0));

        assert_eq!(spearman(&recs).unwrap(), Some(1.0));
        let constant: Vec<_> = (1..=3).map(|c| simple(3, c, 2, 0.8)).collect();
        assert_eq!(spearman(&constant).unwrap(), None);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn confusion_examples() {
        let recs: Vec<_> = (1..=3).map(|c| simple(3, c, c, 0.8)).collect();
        let m = confusion_matrix(&recs, true).unwrap();
        assert_eq!(
            m.cells,
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        assert!(m.absent_classes.is_empty());

        let m = confusion_matrix(&[simple(3, 2, 3, 0.8)], true).unwrap();
        assert_eq!(m.cells[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(m.absent_classes, vec![label(1), label(3)]);
        assert_eq!(m.cells[0], vec![0.0; 3]);
    }

    #[test]
    fn report_has_every_metric() {
        let recs: Vec<_> = [(1, 1), (2, 2), (3, 2), (2, 3)]
            .iter()
            .map(|(t, p)| simple(3, *t, *p, 0.6))
            .collect();
        let r = MetricReport::compute(&recs, DEFAULT_BINS).unwrap();
        assert_eq!(r.entries().len(), MetricReport::metric_names().len());
        for ((name, v), expected) in r.entries().into_iter().zip(MetricReport::metric_names()) {
            assert_eq!(name, expected);
            if let Some(v) = v {
                assert!(v.is_finite());
            }
        }
        assert_eq!(r.get("accuracy"), Some(Some(0.5)));
        assert_eq!(r.get("nope"), None);
    }
}
