//! Training objectives, as functions of predicted probabilities and targets.
//!
//! Binary-task losses take `P(y > k)` estimates; the softmax family takes a
//! class distribution. CORN is the exception: it takes the *conditional*
//! probabilities `P(y > k | y ≥ k)` straight off the task heads and needs the
//! whole batch, because each task trains only on examples that reach it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::{
    exceedance_from_soft, sord_soft_label, ClassDistribution, Distance, ExceedanceLabel, HardLabel, ProblemSpec,
    RatingDistribution, TaskProbabilities,
};

/// Probabilities are clamped to `[EPS_LOG, 1 - EPS_LOG]` before taking logs.
pub const EPS_LOG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Ce,
    CeSoft,
    OrCnn,
    OrSoft,
    Corn,
    SordAe,
    SordSe,
}

/// The representation of the training target a loss consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Hard,
    Soft,
    Exceedance,
}

/// What the model's raw outputs mean for a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// K-1 sigmoid outputs estimating `P(y > k)`.
    Tasks,
    /// K-1 sigmoid outputs estimating `P(y > k | y ≥ k)`; chain them for `P(y > k)`.
    ConditionalTasks,
    /// K softmax outputs.
    Classes,
}

impl LossKind {
    pub const ALL: [LossKind; 7] = [
        LossKind::Ce,
        LossKind::CeSoft,
        LossKind::OrCnn,
        LossKind::OrSoft,
        LossKind::Corn,
        LossKind::SordAe,
        LossKind::SordSe,
    ];

    pub fn target_kind(self) -> TargetKind {
        match self {
            LossKind::CeSoft => TargetKind::Soft,
            LossKind::OrSoft => TargetKind::Exceedance,
            LossKind::Ce | LossKind::OrCnn | LossKind::Corn | LossKind::SordAe | LossKind::SordSe => TargetKind::Hard,
        }
    }

    pub fn output_kind(self) -> OutputKind {
        match self {
            LossKind::OrCnn | LossKind::OrSoft => OutputKind::Tasks,
            LossKind::Corn => OutputKind::ConditionalTasks,
            LossKind::Ce | LossKind::CeSoft | LossKind::SordAe | LossKind::SordSe => OutputKind::Classes,
        }
    }

    /// Trains on the annotator distribution rather than a single label.
    pub fn uses_soft_labels(self) -> bool {
        self.target_kind() != TargetKind::Hard
    }
}

/// A training target in the representation its loss expects.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Hard(HardLabel),
    Soft(RatingDistribution),
    Exceedance(ExceedanceLabel),
}

impl Target {
    /// Build the target `kind` needs from an example's soft and hard labels.
    pub fn for_loss(kind: LossKind, soft: &RatingDistribution, hard: HardLabel) -> Target {
        match kind.target_kind() {
            TargetKind::Hard => Target::Hard(hard),
            TargetKind::Soft => Target::Soft(soft.clone()),
            TargetKind::Exceedance => Target::Exceedance(exceedance_from_soft(soft)),
        }
    }
}

/// Model output in probability space.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelOutput {
    Tasks(TaskProbabilities),
    Classes(ClassDistribution),
}

/// How per-example losses combine over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Mean over examples. For CORN: mean within each task's subset, summed over tasks.
    #[default]
    Mean,
    /// Plain sum over examples and tasks.
    Sum,
}

fn ln_clamped(p: f64) -> f64 {
    p.clamp(EPS_LOG, 1.0 - EPS_LOG).ln()
}

/// Binary cross entropy of probability `p` against a (possibly soft) target `t`.
pub fn bce(p: f64, t: f64) -> f64 {
    -(t * ln_clamped(p) + (1.0 - t) * ln_clamped(1.0 - p))
}

fn exceeds(y: HardLabel, task: usize) -> f64 {
    // task is 0-based, so it asks "y > task + 1"
    if y.get() > task + 1 {
        1.0
    } else {
        0.0
    }
}

pub fn or_cnn_loss(tasks: &TaskProbabilities, y: HardLabel) -> f64 {
    tasks
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, p)| bce(*p, exceeds(y, k)))
        .sum()
}

pub fn or_soft_loss(tasks: &TaskProbabilities, target: &ExceedanceLabel) -> f64 {
    tasks
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| bce(*p, *t))
        .sum()
}

pub fn ce_loss(dist: &ClassDistribution, y: HardLabel) -> f64 {
    -ln_clamped(dist.prob(y))
}

pub fn ce_soft_loss(dist: &ClassDistribution, target: &RatingDistribution) -> f64 {
    -dist
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| if *t == 0.0 { 0.0 } else { t * ln_clamped(*p) })
        .sum::<f64>()
}

pub fn sord_loss(dist: &ClassDistribution, y: HardLabel, spec: &ProblemSpec, distance: Distance) -> f64 {
    ce_soft_loss(dist, &sord_soft_label(y, spec, distance))
}

/// Examples that task `k` (0-based) trains on: those with `y ≥ k + 1`.
pub fn corn_subset_sizes(labels: &[HardLabel], num_tasks: usize) -> Vec<usize> {
    (0..num_tasks)
        .map(|k| labels.iter().filter(|y| y.get() > k).count())
        .collect()
}

fn corn_loss_reduced(conditional: &[TaskProbabilities], labels: &[HardLabel], reduction: Reduction) -> f64 {
    let Some(first) = conditional.first() else {
        return 0.0;
    };
    let num_tasks = first.num_tasks();
    let sizes = corn_subset_sizes(labels, num_tasks);
    let mut per_task = vec![0.0; num_tasks];
    for (probs, y) in conditional.iter().zip(labels) {
        for (k, p) in probs.as_slice().iter().enumerate().take(y.get()) {
            per_task[k] += bce(*p, exceeds(*y, k));
        }
    }
    per_task
        .iter()
        .zip(&sizes)
        .filter(|(_, n)| **n > 0)
        .map(|(l, n)| match reduction {
            Reduction::Mean => l / *n as f64,
            Reduction::Sum => *l,
        })
        .sum()
}

/// CORN loss over a batch. Task k's BCE is averaged over its subset; empty
/// subsets contribute zero.
pub fn corn_loss(conditional: &[TaskProbabilities], labels: &[HardLabel]) -> f64 {
    corn_loss_reduced(conditional, labels, Reduction::Mean)
}

/// Chain conditional task probabilities into `P(y > k) = Π_{j ≤ k} f_j`.
pub fn corn_unconditional(conditional: &TaskProbabilities) -> TaskProbabilities {
    let mut acc = 1.0;
    let chained = conditional
        .as_slice()
        .iter()
        .map(|f| {
            acc *= f;
            acc
        })
        .collect();
    TaskProbabilities::new(chained).expect("products of probabilities are probabilities")
}

/// Loss of one loss kind over a batch of outputs and targets.
pub fn batch_loss(
    kind: LossKind,
    outputs: &[ModelOutput],
    targets: &[Target],
    spec: &ProblemSpec,
    reduction: Reduction,
) -> Result<f64> {
    if outputs.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} outputs but {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    if outputs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }

    if kind == LossKind::Corn {
        let mut probs = Vec::with_capacity(outputs.len());
        let mut labels = Vec::with_capacity(outputs.len());
        for (o, t) in outputs.iter().zip(targets) {
            match (o, t) {
                (ModelOutput::Tasks(p), Target::Hard(y)) => {
                    probs.push(p.clone());
                    labels.push(*y);
                }
                _ => return Err(mismatch(kind)),
            }
        }
        return Ok(corn_loss_reduced(&probs, &labels, reduction));
    }

    let mut total = 0.0;
    for (o, t) in outputs.iter().zip(targets) {
        total += match (kind, o, t) {
            (LossKind::OrCnn, ModelOutput::Tasks(p), Target::Hard(y)) => or_cnn_loss(p, *y),
            (LossKind::OrSoft, ModelOutput::Tasks(p), Target::Exceedance(e)) => or_soft_loss(p, e),
            (LossKind::Ce, ModelOutput::Classes(d), Target::Hard(y)) => ce_loss(d, *y),
            (LossKind::CeSoft, ModelOutput::Classes(d), Target::Soft(s)) => ce_soft_loss(d, s),
            (LossKind::SordAe, ModelOutput::Classes(d), Target::Hard(y)) => sord_loss(d, *y, spec, Distance::Absolute),
            (LossKind::SordSe, ModelOutput::Classes(d), Target::Hard(y)) => sord_loss(d, *y, spec, Distance::Squared),
            _ => return Err(mismatch(kind)),
        };
    }
    Ok(match reduction {
        Reduction::Mean => total / outputs.len() as f64,
        Reduction::Sum => total,
    })
}

fn mismatch(kind: LossKind) -> Error {
    Error::invalid(format!(
        "{kind:?} expects {:?} targets and {:?} outputs",
        kind.target_kind(),
        kind.output_kind()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::class_distribution_from_tasks_flagged;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn tasks(v: &[f64]) -> TaskProbabilities {
        TaskProbabilities::new(v.to_vec()).unwrap()
    }

    fn dist(v: &[f64]) -> ClassDistribution {
        ClassDistribution::new(v.to_vec()).unwrap()
    }

    fn y(class: usize) -> HardLabel {
        HardLabel::from_index(class - 1)
    }

    #[test]
    fn or_cnn_examples() {
        assert!((or_cnn_loss(&tasks(&[0.5]), y(2)) - LN_2).abs() < 1e-15);
        let d = EPS_LOG;
        let perfect = or_cnn_loss(&tasks(&[1.0 - d, 1.0 - d, d]), y(3));
        assert!(perfect < 1e-10);
        let expect = -(0.8f64.ln()) - 0.7f64.ln();
        assert!((or_cnn_loss(&tasks(&[0.8, 0.3]), y(2)) - expect).abs() < 1e-15);
        assert!((expect - 0.5798).abs() < 1e-4);
    }

    #[test]
    fn or_soft_examples() {
        let t = tasks(&[0.7, 0.4, 0.1]);
        let one_hot = exceedance_from_soft(&RatingDistribution::one_hot(y(3), 4));
        assert_eq!(or_soft_loss(&t, &one_hot), or_cnn_loss(&t, y(3)));

        let half = ExceedanceLabel::new(vec![0.5]).unwrap();
        assert!((or_soft_loss(&tasks(&[0.5]), &half) - LN_2).abs() < 1e-15);
        for p in [0.3, 0.45, 0.55, 0.8] {
            assert!(or_soft_loss(&tasks(&[p]), &half) > LN_2);
        }

        let target = ExceedanceLabel::new(vec![2.0 / 3.0, 0.0]).unwrap();
        let a: f64 = 2.0 / 3.0;
        let expect = -(a * a.ln() + (1.0 - a) * (1.0 - a).ln()) - 0.9f64.ln();
        assert!((or_soft_loss(&tasks(&[2.0 / 3.0, 0.1]), &target) - expect).abs() < 1e-14);
    }

    #[test]
    fn ce_examples() {
        assert!(ce_loss(&dist(&[1.0 - 1e-12, 1e-12]), y(1)) < 1e-11);
        let u = ClassDistribution::uniform(4);
        for c in 1..=4 {
            assert!((ce_loss(&u, y(c)) - 4f64.ln()).abs() < 1e-15);
        }
        assert!((ce_loss(&dist(&[0.25, 0.5, 0.25]), y(3)) - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn ce_soft_examples() {
        let d = dist(&[0.2, 0.5, 0.3]);
        let one_hot = RatingDistribution::one_hot(y(2), 3);
        assert_eq!(ce_soft_loss(&d, &one_hot), ce_loss(&d, y(2)));

        let target = RatingDistribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let entropy = -(0.2f64 * 0.2f64.ln() + 0.5 * 0.5f64.ln() + 0.3 * 0.3f64.ln());
        assert!((ce_soft_loss(&d, &target) - entropy).abs() < 1e-15);

        let half = RatingDistribution::new(vec![0.5, 0.5]).unwrap();
        let v = ce_soft_loss(&dist(&[0.9, 0.1]), &half);
        assert!((v + 0.5 * (0.9f64.ln() + 0.1f64.ln())).abs() < 1e-15);
        assert!((v - 1.2040).abs() < 1e-4);
    }

    #[test]
    fn corn_subsets() {
        let p = tasks(&[0.3, 0.6]);
        // y = 1 trains task 1 only, with target 0
        let l1 = corn_loss(std::slice::from_ref(&p), &[y(1)]);
        assert!((l1 - bce(0.3, 0.0)).abs() < 1e-15);
        // y = 3 trains both tasks with target 1
        let l3 = corn_loss(std::slice::from_ref(&p), &[y(3)]);
        assert!((l3 - bce(0.3, 1.0) - bce(0.6, 1.0)).abs() < 1e-15);
        // batch {1, 3}: task 1 averages over both, task 2 sees only y = 3
        assert_eq!(corn_subset_sizes(&[y(1), y(3)], 2), vec![2, 1]);
        let both = corn_loss(&[p.clone(), p.clone()], &[y(1), y(3)]);
        let expect = (bce(0.3, 0.0) + bce(0.3, 1.0)) / 2.0 + bce(0.6, 1.0);
        assert!((both - expect).abs() < 1e-15);
        // an empty task-2 subset adds nothing
        assert_eq!(corn_loss(std::slice::from_ref(&p), &[y(1)]), l1);
    }

    #[test]
    fn corn_chain_rule() {
        let u = corn_unconditional(&tasks(&[0.8, 0.5]));
        assert!((u.as_slice()[0] - 0.8).abs() < 1e-15 && (u.as_slice()[1] - 0.4).abs() < 1e-15);
        assert_eq!(
            corn_unconditional(&tasks(&[1.0, 1.0, 1.0])).as_slice(),
            &[1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn sord_examples() {
        let spec = ProblemSpec::new(4).unwrap();
        let label = sord_soft_label(y(2), &spec, Distance::Absolute);
        let as_pred = dist(label.as_slice());
        let entropy: f64 = -label.as_slice().iter().map(|p| p * p.ln()).sum::<f64>();
        assert!((sord_loss(&as_pred, y(2), &spec, Distance::Absolute) - entropy).abs() < 1e-14);

        let u = ClassDistribution::uniform(4);
        assert!((sord_loss(&u, y(2), &spec, Distance::Absolute) - 4f64.ln()).abs() < 1e-14);

        let two = ProblemSpec::new(2).unwrap();
        let e = (-1.0f64).exp();
        let (w0, w1) = (1.0 / (1.0 + e), e / (1.0 + e));
        let d = dist(&[0.7, 0.3]);
        let expect = -(w0 * 0.7f64.ln() + w1 * 0.3f64.ln());
        assert!((sord_loss(&d, y(1), &two, Distance::Squared) - expect).abs() < 1e-15);
    }

    #[test]
    fn batch_loss_rejects_mismatched_targets() {
        let spec = ProblemSpec::new(3).unwrap();
        let out = [ModelOutput::Tasks(tasks(&[0.5, 0.5]))];
        let soft = RatingDistribution::one_hot(y(1), 3);
        assert!(batch_loss(LossKind::OrCnn, &out, &[Target::Soft(soft)], &spec, Reduction::Mean).is_err());
        assert!(batch_loss(LossKind::Ce, &out, &[Target::Hard(y(1))], &spec, Reduction::Mean).is_err());
        assert!(batch_loss(LossKind::OrCnn, &[], &[], &spec, Reduction::Mean).is_err());
    }

    fn arb_tasks(n: usize) -> impl Strategy<Value = TaskProbabilities> {
        prop::collection::vec(0.001f64..0.999, n).prop_map(|v| TaskProbabilities::new(v).unwrap())
    }

    fn arb_dist(k: usize) -> impl Strategy<Value = ClassDistribution> {
        prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
            let s: f64 = v.iter().sum();
            ClassDistribution::new(v.iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn corn_chain_is_rank_consistent(t in arb_tasks(6)) {
            let u = corn_unconditional(&t);
            prop_assert!(u.is_rank_consistent());
            prop_assert!(!class_distribution_from_tasks_flagged(&u).1);
        }

        #[test]
        fn losses_are_nonnegative_and_minimized_at_target(
            t in arb_tasks(3),
            d in arb_dist(4),
            target in arb_dist(4),
        ) {
            let soft = RatingDistribution::new(target.as_slice().to_vec()).unwrap();
            let ex = exceedance_from_soft(&soft);
            prop_assert!(or_soft_loss(&t, &ex) >= 0.0);
            prop_assert!(ce_soft_loss(&d, &soft) >= 0.0);
            let at_target = TaskProbabilities::new(ex.as_slice().iter().map(|p| p.clamp(1e-9, 1.0 - 1e-9)).collect()).unwrap();
            prop_assert!(or_soft_loss(&at_target, &ex) <= or_soft_loss(&t, &ex) + 1e-9);
            prop_assert!(ce_soft_loss(&target, &soft) <= ce_soft_loss(&d, &soft) + 1e-12);
        }

        #[test]
        fn batch_losses_are_permutation_invariant(
            probs in prop::collection::vec(arb_tasks(3), 2..8),
            classes in prop::collection::vec(1usize..=4, 8),
            rotate in 0usize..8,
        ) {
            let spec = ProblemSpec::new(4).unwrap();
            let n = probs.len();
            let outs: Vec<ModelOutput> = probs.iter().cloned().map(ModelOutput::Tasks).collect();
            let tg: Vec<Target> = classes[..n].iter().map(|c| Target::Hard(y(*c))).collect();
            let mut outs_r = outs.clone();
            let mut tg_r = tg.clone();
            outs_r.rotate_left(rotate % n);
            tg_r.rotate_left(rotate % n);
            for kind in [LossKind::OrCnn, LossKind::Corn] {
                let a = batch_loss(kind, &outs, &tg, &spec, Reduction::Mean).unwrap();
                let b = batch_loss(kind, &outs_r, &tg_r, &spec, Reduction::Mean).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
