//! A small multilayer perceptron with ordinal or softmax heads, exact
//! gradients for every loss in [`crate::losses`], and Adam.
//!
//! Parameters live in one flat vector so the optimizer, the gradient and the
//! checkpoint format all share a single layout:
//!
//! ```text
//! [layer 0 W (out x in, row-major) | layer 0 b | ... | head W | head b]
//! ```
//!
//! Head shapes per [`HeadKind`]:
//! * `Independent`: W is (K-1) x h, b has K-1 entries.
//! * `SharedSlopeBias`: W is a single row of h, b has K-1 entries.
//! * `Softmax`: W is K x h, b has K entries.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{batch_loss, LossKind, ModelOutput, OutputKind, Reduction, Target};
use crate::ordinal::sord_soft_label;
use crate::ordinal::{class_distribution_from_tasks, ClassDistribution, Distance, ProblemSpec, TaskProbabilities};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub input_dim: usize,
    /// Empty for a purely linear model.
    #[serde(default)]
    pub hidden_dims: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl EncoderConfig {
    pub fn linear(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: Vec::new(),
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("encoder input_dim must be at least 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("encoder hidden dims must be at least 1"));
        }
        Ok(())
    }

    /// Width of the representation handed to the head.
    pub fn output_dim(&self) -> usize {
        self.hidden_dims.last().copied().unwrap_or(self.input_dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// One affine map per subtask (OR-CNN).
    Independent,
    /// One shared affine output plus a free bias per subtask (CORAL).
    SharedSlopeBias,
    /// K-way affine map followed by softmax.
    Softmax,
}

impl HeadKind {
    pub fn num_outputs(self, num_classes: usize) -> usize {
        match self {
            HeadKind::Softmax => num_classes,
            HeadKind::Independent | HeadKind::SharedSlopeBias => num_classes - 1,
        }
    }

    pub fn is_task_head(self) -> bool {
        self != HeadKind::Softmax
    }

    fn weight_rows(self, num_classes: usize) -> usize {
        match self {
            HeadKind::SharedSlopeBias => 1,
            _ => self.num_outputs(num_classes),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    rows: usize,
    cols: usize,
}

fn layout(encoder: &EncoderConfig, head: HeadKind, num_classes: usize) -> (Vec<Dense>, Dense, usize, usize) {
    let mut offset = 0;
    let mut dense = |rows: usize, cols: usize, nbias: usize| {
        let d = Dense {
            w: offset,
            b: offset + rows * cols,
            rows,
            cols,
        };
        offset += rows * cols + nbias;
        d
    };
    let mut layers = Vec::with_capacity(encoder.hidden_dims.len());
    let mut fan_in = encoder.input_dim;
    for &h in &encoder.hidden_dims {
        layers.push(dense(h, fan_in, h));
        fan_in = h;
    }
    let head_layer = dense(head.weight_rows(num_classes), fan_in, head.num_outputs(num_classes));
    (layers, head_layer, head.num_outputs(num_classes), offset)
}

/// Network weights plus the architecture needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    encoder: EncoderConfig,
    head: HeadKind,
    num_classes: usize,
    values: Vec<f64>,
    layers: Vec<Dense>,
    head_layer: Dense,
    num_outputs: usize,
}

impl PartialEq for Dense {
    fn eq(&self, other: &Self) -> bool {
        (self.w, self.b, self.rows, self.cols) == (other.w, other.b, other.rows, other.cols)
    }
}

impl ModelParams {
    /// All-zero parameters for the given architecture.
    pub fn zeros(encoder: &EncoderConfig, head: HeadKind, spec: &ProblemSpec) -> Result<Self> {
        encoder.validate()?;
        let (layers, head_layer, num_outputs, len) = layout(encoder, head, spec.num_classes());
        Ok(Self {
            encoder: encoder.clone(),
            head,
            num_classes: spec.num_classes(),
            values: vec![0.0; len],
            layers,
            head_layer,
            num_outputs,
        })
    }

    /// Fan-in scaled uniform weights `U(-1/√fan_in, 1/√fan_in)`, zero biases.
    pub fn init(encoder: &EncoderConfig, head: HeadKind, spec: &ProblemSpec, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(encoder, head, spec)?;
        let mut rng = rng::stream(seed, rng::Stream::Init);
        let dense: Vec<Dense> = params.layers.iter().copied().chain([params.head_layer]).collect();
        for d in dense {
            let bound = 1.0 / (d.cols as f64).sqrt();
            for w in &mut params.values[d.w..d.w + d.rows * d.cols] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(params)
    }

    pub fn encoder(&self) -> &EncoderConfig {
        &self.encoder
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Head bias terms; for `SharedSlopeBias` these are the per-task biases.
    pub fn head_biases(&self) -> &[f64] {
        &self.values[self.head_layer.b..self.head_layer.b + self.num_outputs]
    }

    pub fn head_biases_mut(&mut self) -> &mut [f64] {
        let b = self.head_layer.b;
        &mut self.values[b..b + self.num_outputs]
    }

    /// Raw head outputs: K-1 task logits or K class logits.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_input(features)?;
        Ok(self.forward_cached(features).logits)
    }

    /// Probability-space output for a model trained with `kind`.
    pub fn predict(&self, features: &[f64], kind: OutputKind) -> Result<Prediction> {
        let logits = self.forward(features)?;
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Prediction::from_logits(&logits, kind))
    }

    fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.encoder.input_dim {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.encoder.input_dim,
                features.len()
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, features: &[f64]) -> Cache {
        let v = &self.values;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for d in &self.layers {
            let input = post.last().map_or(features, Vec::as_slice);
            let z = affine(v, d, input);
            let a = z.iter().map(|z| self.encoder.activation.apply(*z)).collect();
            pre.push(z);
            post.push(a);
        }
        let h = post.last().map_or(features, Vec::as_slice);
        let logits = match self.head {
            HeadKind::SharedSlopeBias => {
                let d = &self.head_layer;
                let shared = dot(&v[d.w..d.w + d.cols], h);
                v[d.b..d.b + self.num_outputs].iter().map(|b| shared + b).collect()
            }
            _ => affine(v, &self.head_layer, h),
        };
        Cache { pre, post, logits }
    }

    /// Accumulate into `grad` the gradient for one example given `dlogits`.
    fn backward(&self, features: &[f64], cache: &Cache, dlogits: &[f64], grad: &mut [f64]) {
        let v = &self.values;
        let h = cache.post.last().map_or(features, Vec::as_slice);
        let d = self.head_layer;
        let mut dh = vec![0.0; d.cols];
        match self.head {
            HeadKind::SharedSlopeBias => {
                let total: f64 = dlogits.iter().sum();
                for (j, hj) in h.iter().enumerate() {
                    grad[d.w + j] += total * hj;
                    dh[j] = total * v[d.w + j];
                }
                for (k, g) in dlogits.iter().enumerate() {
                    grad[d.b + k] += g;
                }
            }
            _ => affine_backward(v, &d, h, dlogits, grad, &mut dh),
        }

        let mut upstream = dh;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let dz: Vec<f64> = upstream
                .iter()
                .zip(&cache.pre[l])
                .zip(&cache.post[l])
                .map(|((g, z), a)| g * self.encoder.activation.derivative(*z, *a))
                .collect();
            let input = if l == 0 { features } else { &cache.post[l - 1] };
            let mut din = vec![0.0; layer.cols];
            affine_backward(v, layer, input, &dz, grad, &mut din);
            upstream = din;
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            encoder: self.encoder.clone(),
            head: self.head,
            num_classes: self.num_classes,
            values: self.values.clone(),
        };
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("refusing to checkpoint non-finite parameters"));
        }
        let json = serde_json::to_vec(&ckpt).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        crate::report::write_atomic(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint version {}",
                ckpt.format_version
            )));
        }
        let spec = ProblemSpec::new(ckpt.num_classes)?;
        let mut params = Self::zeros(&ckpt.encoder, ckpt.head, &spec)?;
        if ckpt.values.len() != params.values.len() {
            return Err(Error::invalid(format!(
                "checkpoint has {} values, architecture needs {}",
                ckpt.values.len(),
                params.values.len()
            )));
        }
        params.values = ckpt.values;
        Ok(params)
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    encoder: EncoderConfig,
    head: HeadKind,
    num_classes: usize,
    values: Vec<f64>,
}

struct Cache {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn affine(v: &[f64], d: &Dense, input: &[f64]) -> Vec<f64> {
    (0..d.rows)
        .map(|r| {
            let row = &v[d.w + r * d.cols..d.w + (r + 1) * d.cols];
            dot(row, input) + v[d.b + r]
        })
        .collect()
}

fn affine_backward(v: &[f64], d: &Dense, input: &[f64], dout: &[f64], grad: &mut [f64], din: &mut [f64]) {
    for (r, g) in dout.iter().enumerate() {
        if *g == 0.0 {
            continue;
        }
        let row = d.w + r * d.cols;
        for (c, x) in input.iter().enumerate() {
            grad[row + c] += g * x;
            din[c] += g * v[row + c];
        }
        grad[d.b + r] += g;
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// A model's prediction for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `P(y > k)` for binary-task models (chained for CORN).
    pub tasks: Option<TaskProbabilities>,
    pub dist: ClassDistribution,
}

impl Prediction {
    /// Panics on non-finite logits.
    pub fn from_logits(logits: &[f64], kind: OutputKind) -> Self {
        match kind {
            OutputKind::Classes => Prediction {
                tasks: None,
                dist: ClassDistribution::new(softmax(logits)).expect("softmax is a distribution"),
            },
            OutputKind::Tasks | OutputKind::ConditionalTasks => {
                let probs = TaskProbabilities::new(logits.iter().map(|z| sigmoid(*z)).collect())
                    .expect("sigmoid outputs lie in [0, 1]");
                let tasks = if kind == OutputKind::ConditionalTasks {
                    crate::losses::corn_unconditional(&probs)
                } else {
                    probs
                };
                Prediction {
                    dist: class_distribution_from_tasks(&tasks),
                    tasks: Some(tasks),
                }
            }
        }
    }
}

/// One training example: features plus the target its loss expects.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub features: &'a [f64],
    pub target: &'a Target,
}

/// Batch loss and its gradient with respect to every parameter.
///
/// The loss value is the [`crate::losses::batch_loss`] value on the model's
/// probabilities; the gradient uses the fused sigmoid/softmax + cross-entropy
/// form.
pub fn loss_and_gradient(
    params: &ModelParams,
    batch: &[Sample<'_>],
    kind: LossKind,
    spec: &ProblemSpec,
    reduction: Reduction,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let output_kind = kind.output_kind();
    if params.head.is_task_head() != (output_kind != OutputKind::Classes) {
        return Err(Error::invalid(format!(
            "{kind:?} cannot train a {:?} head",
            params.head
        )));
    }
    if spec.num_classes() != params.num_classes {
        return Err(Error::invalid("problem and model disagree on the number of classes"));
    }

    let mut caches = Vec::with_capacity(batch.len());
    let mut outputs = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());
    for s in batch {
        params.check_input(s.features)?;
        let cache = params.forward_cached(s.features);
        if cache.logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite);
        }
        outputs.push(match output_kind {
            OutputKind::Classes => {
                ModelOutput::Classes(ClassDistribution::new(softmax(&cache.logits)).expect("softmax is a distribution"))
            }
            _ => ModelOutput::Tasks(
                TaskProbabilities::new(cache.logits.iter().map(|z| sigmoid(*z)).collect())
                    .expect("sigmoid outputs lie in [0, 1]"),
            ),
        });
        targets.push(s.target.clone());
        caches.push(cache);
    }
    let loss = batch_loss(kind, &outputs, &targets, spec, reduction)?;

    let n = batch.len() as f64;
    let corn_sizes = if kind == LossKind::Corn {
        let labels: Vec<_> = targets
            .iter()
            .map(|t| match t {
                Target::Hard(y) => *y,
                _ => unreachable!("batch_loss validated CORN targets"),
            })
            .collect();
        crate::losses::corn_subset_sizes(&labels, spec.num_tasks())
    } else {
        Vec::new()
    };

    let mut grad = vec![0.0; params.len()];
    for ((s, cache), out) in batch.iter().zip(&caches).zip(&outputs) {
        let dlogits = logit_gradient(kind, out, s.target, spec, reduction, n, &corn_sizes);
        params.backward(s.features, cache, &dlogits, &mut grad);
    }
    Ok((loss, grad))
}

fn logit_gradient(
    kind: LossKind,
    out: &ModelOutput,
    target: &Target,
    spec: &ProblemSpec,
    reduction: Reduction,
    n: f64,
    corn_sizes: &[usize],
) -> Vec<f64> {
    let scale = match reduction {
        Reduction::Mean => 1.0 / n,
        Reduction::Sum => 1.0,
    };
    match (out, target) {
        (ModelOutput::Tasks(p), Target::Hard(y)) if kind == LossKind::Corn => p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if y.get() <= k {
                    return 0.0;
                }
                let t = if y.get() > k + 1 { 1.0 } else { 0.0 };
                let s = match reduction {
                    Reduction::Mean => 1.0 / corn_sizes[k] as f64,
                    Reduction::Sum => 1.0,
                };
                (p - t) * s
            })
            .collect(),
        (ModelOutput::Tasks(p), Target::Hard(y)) => p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, p)| (p - if y.get() > k + 1 { 1.0 } else { 0.0 }) * scale)
            .collect(),
        (ModelOutput::Tasks(p), Target::Exceedance(e)) => p
            .as_slice()
            .iter()
            .zip(e.as_slice())
            .map(|(p, t)| (p - t) * scale)
            .collect(),
        (ModelOutput::Classes(d), t) => {
            let soft = match (kind, t) {
                (LossKind::CeSoft, Target::Soft(s)) => s.clone(),
                (LossKind::SordAe, Target::Hard(y)) => sord_soft_label(*y, spec, Distance::Absolute),
                (LossKind::SordSe, Target::Hard(y)) => sord_soft_label(*y, spec, Distance::Squared),
                (_, Target::Hard(y)) => crate::ordinal::RatingDistribution::one_hot(*y, spec.num_classes()),
                _ => unreachable!("batch_loss validated targets"),
            };
            d.as_slice()
                .iter()
                .zip(soft.as_slice())
                .map(|(p, t)| (p - t) * scale)
                .collect()
        }
        _ => unreachable!("batch_loss validated targets"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Self {
        Self {
            config,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Bias-corrected Adam update, in place.
pub fn adam_step(params: &mut ModelParams, grad: &[f64], state: &mut AdamState) -> Result<()> {
    if grad.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::invalid(
            "gradient, optimizer state and parameters differ in shape",
        ));
    }
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params.values.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Elementwise mean of member predictions.
pub fn ensemble_average(dists: &[ClassDistribution]) -> Result<ClassDistribution> {
    let first = dists
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty ensemble"))?;
    let k = first.num_classes();
    if dists.iter().any(|d| d.num_classes() != k) {
        return Err(Error::invalid("ensemble members disagree on the number of classes"));
    }
    let n = dists.len() as f64;
    let mean = (0..k)
        .map(|j| dists.iter().map(|d| d.as_slice()[j]).sum::<f64>() / n)
        .collect();
    ClassDistribution::new(mean)
}

/// Mean of member task probabilities.
pub fn ensemble_tasks(tasks: &[TaskProbabilities]) -> Result<TaskProbabilities> {
    let first = tasks
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty ensemble"))?;
    let n = tasks.len() as f64;
    let mean = (0..first.num_tasks())
        .map(|j| tasks.iter().map(|t| t.as_slice()[j]).sum::<f64>() / n)
        .collect();
    TaskProbabilities::new(mean)
}

/// Average a set of member predictions.
pub fn ensemble_predictions(members: &[Prediction]) -> Result<Prediction> {
    let dists: Vec<_> = members.iter().map(|p| p.dist.clone()).collect();
    let dist = ensemble_average(&dists)?;
    let tasks = members
        .iter()
        .map(|p| p.tasks.clone())
        .collect::<Option<Vec<_>>>()
        .map(|t| ensemble_tasks(&t))
        .transpose()?;
    Ok(Prediction { tasks, dist })
}

/// Shuffle `0..n` with a generator drawn from `rng`.
pub(crate) fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
