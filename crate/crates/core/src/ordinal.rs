//! Label representations for a K-class ordinal problem and the transforms
//! between them.
//!
//! Classes are 1-based in every public surface (`1 ≺ 2 ≺ … ≺ K`). Internally
//! vectors are indexed from zero, so class `k` lives at index `k - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
}

impl ProblemSpec {
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!(
                "an ordinal problem needs at least 2 classes, got {num_classes}"
            )));
        }
        Ok(Self {
            num_classes,
            class_names: None,
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes {
            return Err(Error::invalid(format!(
                "expected {} class names, got {}",
                self.num_classes,
                names.len()
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of binary "exceeds rank k" subtasks, `K - 1`.
    pub fn num_tasks(&self) -> usize {
        self.num_classes - 1
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn label(&self, class: usize) -> Result<HardLabel> {
        HardLabel::new(class, self.num_classes)
    }
}

/// A single ordinal class, stored 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HardLabel(usize);

impl HardLabel {
    pub fn new(class: usize, num_classes: usize) -> Result<Self> {
        if class == 0 || class > num_classes {
            return Err(Error::invalid(format!("class {class} is outside 1..={num_classes}")));
        }
        Ok(Self(class))
    }

    /// Label for the zero-based vector position `index`.
    pub const fn from_index(index: usize) -> Self {
        Self(index + 1)
    }

    /// 1-based class.
    pub const fn get(self) -> usize {
        self.0
    }

    /// 0-based vector position.
    pub const fn index(self) -> usize {
        self.0 - 1
    }
}

impl std::fmt::Display for HardLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn validate_distribution(what: &str, probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::invalid(format!(
            "{what} needs at least 2 entries, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
        return Err(Error::invalid(format!("{what} entry {p} is outside [0, 1]")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::invalid(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Per-example soft label: the fraction of annotators choosing each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RatingDistribution(Vec<f64>);

impl RatingDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_distribution("rating distribution", &probs)?;
        Ok(Self(probs))
    }

    pub fn one_hot(label: HardLabel, num_classes: usize) -> Self {
        let mut probs = vec![0.0; num_classes];
        probs[label.index()] = 1.0;
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn prob(&self, label: HardLabel) -> f64 {
        self.0[label.index()]
    }

    /// Largest class probability; the annotator agreement on the mode.
    pub fn max_prob(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Classes chosen by at least one annotator.
    pub fn support(&self) -> impl Iterator<Item = HardLabel> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| HardLabel::from_index(i))
    }
}

impl TryFrom<Vec<f64>> for RatingDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RatingDistribution> for Vec<f64> {
    fn from(d: RatingDistribution) -> Self {
        d.0
    }
}

/// A model's predicted distribution over the K classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_distribution("class distribution", &probs)?;
        Ok(Self(probs))
    }

    pub fn uniform(num_classes: usize) -> Self {
        Self(vec![1.0 / num_classes as f64; num_classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn prob(&self, label: HardLabel) -> f64 {
        self.0[label.index()]
    }

    /// Probability of the top class, used as the prediction's confidence.
    pub fn confidence(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ClassDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClassDistribution> for Vec<f64> {
    fn from(d: ClassDistribution) -> Self {
        d.0
    }
}

/// Soft "label exceeds rank k" targets, one per subtask.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceLabel(Vec<f64>);

impl ExceedanceLabel {
    pub fn new(exceed: Vec<f64>) -> Result<Self> {
        if exceed.is_empty() {
            return Err(Error::invalid("exceedance label needs at least one task"));
        }
        if exceed.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::invalid("exceedance entries must lie in [0, 1]"));
        }
        if exceed.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("exceedance entries must be non-increasing"));
        }
        Ok(Self(exceed))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_tasks(&self) -> usize {
        self.0.len()
    }
}

/// Model estimates of `P(y > k)` for k = 1..K-1. Not necessarily monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskProbabilities(Vec<f64>);

impl TaskProbabilities {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("need at least one task probability"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::invalid("task probabilities must lie in [0, 1]"));
        }
        Ok(Self(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_tasks(&self) -> usize {
        self.0.len()
    }

    /// `P(y > k)` non-increasing in k.
    pub fn is_rank_consistent(&self) -> bool {
        self.0.windows(2).all(|w| w[1] <= w[0])
    }
}

/// How an exact tie for the largest probability is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Pick the lowest tied class.
    #[default]
    LowestClass,
    /// Report every tied class.
    ReportTie,
}

/// Outcome of taking the mode of a distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    Unique(HardLabel),
    /// Tied classes in increasing order.
    Tie(Vec<HardLabel>),
}

impl Mode {
    /// The unique label, or the lowest tied class.
    pub fn lowest(&self) -> HardLabel {
        match self {
            Mode::Unique(l) => *l,
            Mode::Tie(ls) => ls[0],
        }
    }

    pub fn is_tie(&self) -> bool {
        matches!(self, Mode::Tie(_))
    }
}

fn mode_of(probs: &[f64], policy: TiePolicy) -> Mode {
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<HardLabel> = probs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == max)
        .map(|(i, _)| HardLabel::from_index(i))
        .collect();
    match (tied.len(), policy) {
        (1, _) | (_, TiePolicy::LowestClass) => Mode::Unique(tied[0]),
        (_, TiePolicy::ReportTie) => Mode::Tie(tied),
    }
}

/// Soft label from raw annotator votes.
pub fn soft_label_from_votes(votes: &[HardLabel], spec: &ProblemSpec) -> Result<RatingDistribution> {
    if votes.is_empty() {
        return Err(Error::invalid("cannot form a soft label from zero votes"));
    }
    let k = spec.num_classes();
    let mut counts = vec![0usize; k];
    for v in votes {
        if v.get() > k {
            return Err(Error::invalid(format!("vote {v} is outside 1..={k}")));
        }
        counts[v.index()] += 1;
    }
    let n = votes.len() as f64;
    Ok(RatingDistribution(counts.into_iter().map(|c| c as f64 / n).collect()))
}

/// The mode rating of a soft label.
pub fn hard_label_from_soft(dist: &RatingDistribution, policy: TiePolicy) -> Mode {
    mode_of(dist.as_slice(), policy)
}

/// `exceed[k] = Σ_{j > k} probs[j]`, accumulated from the top class down so the
/// result is exactly non-increasing.
pub fn exceedance_from_soft(dist: &RatingDistribution) -> ExceedanceLabel {
    ExceedanceLabel(suffix_sums(dist.as_slice()))
}

/// Implied `P(y > k)` of a predicted class distribution.
pub fn exceedance_from_prediction(dist: &ClassDistribution) -> TaskProbabilities {
    TaskProbabilities(suffix_sums(dist.as_slice()).into_iter().map(|p| p.min(1.0)).collect())
}

fn suffix_sums(probs: &[f64]) -> Vec<f64> {
    let k = probs.len();
    let mut exceed = vec![0.0; k - 1];
    let mut acc = 0.0;
    for j in (1..k).rev() {
        acc += probs[j];
        exceed[j - 1] = acc;
    }
    exceed
}

/// Adjacent differences of the task probabilities. Negative differences (only
/// possible for rank-inconsistent tasks) are clamped to zero and the result
/// renormalized.
pub fn class_distribution_from_tasks(tasks: &TaskProbabilities) -> ClassDistribution {
    class_distribution_from_tasks_flagged(tasks).0
}

/// As [`class_distribution_from_tasks`], also reporting whether clamping fired.
pub fn class_distribution_from_tasks_flagged(tasks: &TaskProbabilities) -> (ClassDistribution, bool) {
    let t = tasks.as_slice();
    let k = t.len() + 1;
    let mut raw = Vec::with_capacity(k);
    raw.push(1.0 - t[0]);
    for j in 1..t.len() {
        raw.push(t[j - 1] - t[j]);
    }
    raw.push(t[k - 2]);

    let clamped = raw.iter().any(|p| *p < 0.0);
    if clamped {
        for p in &mut raw {
            *p = p.max(0.0);
        }
        let total: f64 = raw.iter().sum();
        assert!(total > 0.0, "adjacent differences vanished after clamping");
        for p in &mut raw {
            *p /= total;
        }
    }
    (ClassDistribution(raw), clamped)
}

/// One plus the number of tasks with probability strictly above 0.5.
pub fn decode_count(tasks: &TaskProbabilities) -> HardLabel {
    HardLabel::from_index(tasks.as_slice().iter().filter(|p| **p > 0.5).count())
}

pub fn decode_argmax(dist: &ClassDistribution, policy: TiePolicy) -> Mode {
    mode_of(dist.as_slice(), policy)
}

/// Class-distance penalty used to smooth a hard label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Absolute,
    Squared,
}

impl Distance {
    fn penalty(self, a: usize, b: usize) -> f64 {
        let d = a.abs_diff(b) as f64;
        match self {
            Distance::Absolute => d,
            Distance::Squared => d * d,
        }
    }
}

/// Softmax of negative class distance from `true_class`.
pub fn sord_soft_label(true_class: HardLabel, spec: &ProblemSpec, distance: Distance) -> RatingDistribution {
    let y = true_class.get();
    let weights: Vec<f64> = (1..=spec.num_classes())
        .map(|k| (-distance.penalty(k, y)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    RatingDistribution(weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(k: usize) -> ProblemSpec {
        ProblemSpec::new(k).unwrap()
    }

    fn labels(classes: &[usize]) -> Vec<HardLabel> {
        classes.iter().map(|c| HardLabel::from_index(c - 1)).collect()
    }

    fn tasks(v: &[f64]) -> TaskProbabilities {
        TaskProbabilities::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn problem_spec_rejects_single_class() {
        assert!(ProblemSpec::new(1).is_err());
        assert!(ProblemSpec::new(2).is_ok());
        assert!(spec(3).with_class_names(vec!["a".into()]).is_err());
    }

    #[test]
    fn soft_label_counts_votes() {
        let s = spec(4);
        let d = soft_label_from_votes(&labels(&[2, 2, 3]), &s).unwrap();
        assert!(close(d.as_slice(), &[0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0], 1e-15));
        let d = soft_label_from_votes(&labels(&[1]), &s).unwrap();
        assert_eq!(d.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let d = soft_label_from_votes(&labels(&[1, 2, 3, 4]), &s).unwrap();
        assert_eq!(d.as_slice(), &[0.25; 4]);
    }

    #[test]
    fn soft_label_rejects_bad_votes() {
        let s = spec(4);
        assert!(soft_label_from_votes(&[], &s).is_err());
        assert!(soft_label_from_votes(&labels(&[2, 5]), &s).is_err());
        assert!(HardLabel::new(0, 4).is_err());
    }

    #[test]
    fn mode_with_tie_policies() {
        let d = RatingDistribution::new(vec![0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]).unwrap();
        assert_eq!(
            hard_label_from_soft(&d, TiePolicy::ReportTie),
            Mode::Unique(HardLabel::from_index(1))
        );
        let tied = RatingDistribution::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(
            hard_label_from_soft(&tied, TiePolicy::ReportTie),
            Mode::Tie(labels(&[1, 2]))
        );
        assert_eq!(
            hard_label_from_soft(&tied, TiePolicy::LowestClass),
            Mode::Unique(HardLabel::from_index(0))
        );
    }

    #[test]
    fn exceedance_examples() {
        let d = RatingDistribution::new(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 0.0]).unwrap();
        assert!(close(
            exceedance_from_soft(&d).as_slice(),
            &[1.0, 2.0 / 3.0, 0.0],
            1e-15
        ));
        let first = RatingDistribution::one_hot(HardLabel::from_index(0), 4);
        assert_eq!(exceedance_from_soft(&first).as_slice(), &[0.0, 0.0, 0.0]);
        let last = RatingDistribution::one_hot(HardLabel::from_index(3), 4);
        assert_eq!(exceedance_from_soft(&last).as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn class_distribution_examples() {
        let (d, clamped) = class_distribution_from_tasks_flagged(&tasks(&[0.9, 0.7, 0.2]));
        assert!(!clamped);
        assert!(close(d.as_slice(), &[0.1, 0.2, 0.5, 0.2], 1e-12));

        // raw [0.6, -0.2, 0.6] -> clamp -> [0.6, 0, 0.6] -> renormalize
        let (d, clamped) = class_distribution_from_tasks_flagged(&tasks(&[0.4, 0.6]));
        assert!(clamped);
        assert!(close(d.as_slice(), &[0.5, 0.0, 0.5], 1e-15));

        let eps = 1e-9;
        let d = class_distribution_from_tasks(&tasks(&[1.0 - eps, 1.0 - eps, eps]));
        assert!(close(d.as_slice(), &[0.0, 0.0, 1.0, 0.0], 2.0 * eps));
    }

    #[test]
    fn counting_decode() {
        assert_eq!(decode_count(&tasks(&[0.9, 0.7, 0.2])).get(), 3);
        assert_eq!(decode_count(&tasks(&[0.1, 0.2, 0.3])).get(), 1);
        assert_eq!(decode_count(&tasks(&[0.9, 0.8, 0.7])).get(), 4);
        // exactly 0.5 does not count as exceeding
        assert_eq!(decode_count(&tasks(&[0.5, 0.5])).get(), 1);
    }

    #[test]
    fn argmax_decode_and_divergence_from_counting() {
        let d = ClassDistribution::new(vec![0.1, 0.2, 0.5, 0.2]).unwrap();
        assert_eq!(decode_argmax(&d, TiePolicy::LowestClass).lowest().get(), 3);
        let d = ClassDistribution::new(vec![0.4, 0.05, 0.5, 0.05]).unwrap();
        assert_eq!(decode_argmax(&d, TiePolicy::LowestClass).lowest().get(), 3);

        // Rank-inconsistent tasks: counting gives 2, the implied distribution
        // [0.4, 0.15, 0.01, 0.44] peaks at 4.
        let t = tasks(&[0.6, 0.45, 0.44]);
        assert_eq!(decode_count(&t).get(), 2);
        let d = class_distribution_from_tasks(&t);
        assert!(close(d.as_slice(), &[0.4, 0.15, 0.01, 0.44], 1e-12));
        assert_eq!(decode_argmax(&d, TiePolicy::LowestClass).lowest().get(), 4);

        let u = ClassDistribution::uniform(4);
        assert_eq!(decode_argmax(&u, TiePolicy::LowestClass).lowest().get(), 1);
        assert_eq!(
            decode_argmax(&u, TiePolicy::ReportTie),
            Mode::Tie(labels(&[1, 2, 3, 4]))
        );
    }

    #[test]
    fn sord_examples() {
        let e = std::f64::consts::E;
        let s = spec(4);
        let y = HardLabel::from_index(1);

        let ae = sord_soft_label(y, &s, Distance::Absolute);
        let raw = [1.0 / e, 1.0, 1.0 / e, 1.0 / (e * e)];
        let z: f64 = raw.iter().sum();
        let expect: Vec<f64> = raw.iter().map(|w| w / z).collect();
        assert!(close(ae.as_slice(), &expect, 1e-15));
        assert!(close(ae.as_slice(), &[0.1966, 0.5344, 0.1966, 0.0723], 1e-4));

        let se = sord_soft_label(y, &s, Distance::Squared);
        let raw = [1.0 / e, 1.0, 1.0 / e, (-4.0f64).exp()];
        let z: f64 = raw.iter().sum();
        let expect: Vec<f64> = raw.iter().map(|w| w / z).collect();
        assert!(close(se.as_slice(), &expect, 1e-15));

        let two = spec(2);
        let pair = [1.0 / (1.0 + 1.0 / e), (1.0 / e) / (1.0 + 1.0 / e)];
        for dist in [Distance::Absolute, Distance::Squared] {
            let lo = sord_soft_label(HardLabel::from_index(0), &two, dist);
            let hi = sord_soft_label(HardLabel::from_index(1), &two, dist);
            assert!(close(lo.as_slice(), &pair, 1e-15));
            assert!(close(hi.as_slice(), &[pair[1], pair[0]], 1e-15));
        }
    }

    fn arb_distribution() -> impl Strategy<Value = RatingDistribution> {
        (2usize..8)
            .prop_flat_map(|k| prop::collection::vec(0u32..6, k))
            .prop_filter("at least one vote", |c| c.iter().any(|x| *x > 0))
            .prop_map(|counts| {
                let n: u32 = counts.iter().sum();
                RatingDistribution::new(counts.iter().map(|c| *c as f64 / n as f64).collect()).unwrap()
            })
    }

    fn arb_consistent_tasks() -> impl Strategy<Value = TaskProbabilities> {
        prop::collection::vec(0.0f64..=1.0, 1..7).prop_map(|mut v| {
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            TaskProbabilities::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn exceedance_is_complementary_cdf(d in arb_distribution()) {
            let ex = exceedance_from_soft(&d);
            let p = d.as_slice();
            prop_assert!(ex.as_slice().windows(2).all(|w| w[1] <= w[0]));
            let mut cdf = 0.0;
            for (k, e) in ex.as_slice().iter().enumerate() {
                cdf += p[k];
                prop_assert!((e - (1.0 - cdf)).abs() < 1e-12);
            }
        }

        #[test]
        fn one_hot_exceedance_is_indicator(k in 2usize..8, y in 0usize..8) {
            let y = HardLabel::from_index(y % k);
            let ex = exceedance_from_soft(&RatingDistribution::one_hot(y, k));
            for (j, e) in ex.as_slice().iter().enumerate() {
                let expect = if y.get() > j + 1 { 1.0 } else { 0.0 };
                prop_assert_eq!(*e, expect);
            }
        }

        #[test]
        fn consistent_tasks_round_trip(t in arb_consistent_tasks()) {
            let (d, clamped) = class_distribution_from_tasks_flagged(&t);
            prop_assert!(!clamped);
            let back = exceedance_from_prediction(&d);
            for (a, b) in back.as_slice().iter().zip(t.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn decoders_agree_on_well_separated_tasks(
            k in 3usize..7,
            cut in 0usize..7,
            margins in prop::collection::vec(0.1f64..0.4, 6),
        ) {
            // Monotone tasks: the first `cut` sit at 0.5 + margin, the rest at 0.5 - margin,
            // and the class mass at the counting class dominates.
            let cut = cut % k;
            let mut t: Vec<f64> = (0..k - 1)
                .map(|j| if j < cut { 0.9 + 0.09 * margins[j] } else { 0.1 - 0.09 * margins[j] })
                .collect();
            t.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let tp = TaskProbabilities::new(t).unwrap();
            let count = decode_count(&tp);
            let arg = decode_argmax(&class_distribution_from_tasks(&tp), TiePolicy::LowestClass).lowest();
            prop_assert_eq!(count, arg);
        }

        #[test]
        fn sord_is_unimodal_at_truth(k in 2usize..9, y in 0usize..9, squared in any::<bool>()) {
            let y = HardLabel::from_index(y % k);
            let dist = if squared { Distance::Squared } else { Distance::Absolute };
            let s = sord_soft_label(y, &ProblemSpec::new(k).unwrap(), dist);
            let p = s.as_slice();
            prop_assert_eq!(decode_argmax(&ClassDistribution::new(p.to_vec()).unwrap(), TiePolicy::ReportTie), Mode::Unique(y));
            for j in 0..y.index() {
                prop_assert!(p[j] < p[j + 1]);
            }
            for j in y.index()..k - 1 {
                prop_assert!(p[j] > p[j + 1]);
            }
            // equidistant neighbours get equal mass
            for d in 1..k {
                if y.index() >= d && y.index() + d < k {
                    prop_assert_eq!(p[y.index() - d], p[y.index() + d]);
                }
            }
        }
    }
}
