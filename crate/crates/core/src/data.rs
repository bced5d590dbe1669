//! Multi-rater datasets: CSV ingestion, a latent-threshold synthetic
//! generator, rater-set combination, tie handling and stratified splits.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::kappa_from_table;
use crate::model::shuffled_indices;
use crate::ordinal::{
    exceedance_from_soft, hard_label_from_soft, soft_label_from_votes, ExceedanceLabel, HardLabel, Mode, ProblemSpec,
    RatingDistribution, TiePolicy,
};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub features: Vec<f64>,
    /// One vote per annotator, in annotator order.
    pub votes: Vec<HardLabel>,
}

/// Examples with their derived soft labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    spec: ProblemSpec,
    examples: Vec<Example>,
    soft: Vec<RatingDistribution>,
}

impl Dataset {
    pub fn new(spec: ProblemSpec, examples: Vec<Example>) -> Result<Self> {
        if let Some(first) = examples.first() {
            let dim = first.features.len();
            if dim == 0 {
                return Err(Error::invalid("examples need at least one feature"));
            }
            if let Some(bad) = examples.iter().find(|e| e.features.len() != dim) {
                return Err(Error::invalid(format!(
                    "example {} has {} features, expected {dim}",
                    bad.id,
                    bad.features.len()
                )));
            }
        }
        let soft = examples
            .iter()
            .map(|e| {
                soft_label_from_votes(&e.votes, &spec).map_err(|err| Error::invalid(format!("example {}: {err}", e.id)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { spec, examples, soft })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.examples.first().map_or(0, |e| e.features.len())
    }

    pub fn soft(&self, i: usize) -> &RatingDistribution {
        &self.soft[i]
    }

    pub fn mode(&self, i: usize) -> Mode {
        hard_label_from_soft(&self.soft[i], TiePolicy::ReportTie)
    }

    /// Mode label, lowest class on a tie.
    pub fn hard(&self, i: usize) -> HardLabel {
        self.mode(i).lowest()
    }

    pub fn hard_labels(&self) -> Vec<HardLabel> {
        (0..self.len()).map(|i| self.hard(i)).collect()
    }

    pub fn exceedance(&self, i: usize) -> ExceedanceLabel {
        exceedance_from_soft(&self.soft[i])
    }

    /// Mean Cohen's QWK over annotator pairs, pairing votes by position.
    /// `None` when examples have differing vote counts or fewer than two raters.
    pub fn mean_pairwise_rater_qwk(&self) -> Option<f64> {
        let raters = self.examples.first()?.votes.len();
        if raters < 2 || self.examples.iter().any(|e| e.votes.len() != raters) {
            return None;
        }
        let k = self.spec.num_classes();
        let mut kappas = Vec::new();
        for a in 0..raters {
            for b in a + 1..raters {
                let mut table = vec![vec![0.0; k]; k];
                for e in &self.examples {
                    table[e.votes[a].index()][e.votes[b].index()] += 1.0;
                }
                kappas.push(kappa_from_table(&table).unwrap_or(1.0));
            }
        }
        Some(kappas.iter().sum::<f64>() / kappas.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_examples: usize,
    pub n_features: usize,
    pub num_classes: usize,
    pub n_raters: usize,
    /// K-1 strictly increasing cut points on the latent scale.
    pub thresholds: Vec<f64>,
    pub feature_noise_sd: f64,
    pub rater_noise_sd: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        ProblemSpec::new(self.num_classes)?;
        if self.n_examples == 0 || self.n_features == 0 || self.n_raters == 0 {
            return Err(Error::invalid("n_examples, n_features and n_raters must be at least 1"));
        }
        if self.thresholds.len() != self.num_classes - 1 {
            return Err(Error::invalid(format!(
                "thresholds needs {} entries, got {}",
                self.num_classes - 1,
                self.thresholds.len()
            )));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) || self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("thresholds must be finite and strictly increasing"));
        }
        if !(self.feature_noise_sd >= 0.0 && self.rater_noise_sd >= 0.0) {
            return Err(Error::invalid("noise standard deviations must be non-negative"));
        }
        Ok(())
    }

    /// Class of a latent value: one plus the number of thresholds below it.
    pub fn class_of(&self, z: f64) -> HardLabel {
        HardLabel::from_index(self.thresholds.iter().filter(|t| **t < z).count())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Latent-threshold data: `z ~ N(0, 1)`, features `w z + noise` for a fixed
/// random projection `w`, and each rater thresholds `z + N(0, rater_noise_sd²)`.
///
/// Each source of randomness draws from its own stream, so changing one noise
/// level leaves the other draws untouched.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let spec = ProblemSpec::new(config.num_classes)?;
    let mut proj_rng = rng::stream(config.seed, Stream::Projection);
    let projection: Vec<f64> = (0..config.n_features).map(|_| normal(&mut proj_rng)).collect();
    let mut latent_rng = rng::stream(config.seed, Stream::Latent);
    let mut feature_rng = rng::stream(config.seed, Stream::FeatureNoise);
    let mut rater_rng = rng::stream(config.seed, Stream::RaterNoise);

    let width = config.n_examples.to_string().len();
    let examples = (0..config.n_examples)
        .map(|i| {
            let z = normal(&mut latent_rng);
            let features = projection
                .iter()
                .map(|w| w * z + config.feature_noise_sd * normal(&mut feature_rng))
                .collect();
            let votes = (0..config.n_raters)
                .map(|_| config.class_of(z + config.rater_noise_sd * normal(&mut rater_rng)))
                .collect();
            Example {
                id: format!("syn{i:0width$}"),
                features,
                votes,
            }
        })
        .collect();
    Dataset::new(spec, examples)
}

fn csv_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Load a dataset. Columns: optional `id`, features `f_*`, and either one vote
/// column per annotator `r_*` (blank = no rating) or per-class vote counts
/// `c_1 .. c_K`.
pub fn load_csv(path: &Path, num_classes: usize) -> Result<Dataset> {
    let spec = ProblemSpec::new(num_classes)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();

    let id_col = headers.iter().position(|h| h == "id");
    let cols = |prefix: &str| -> Vec<usize> {
        headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix))
            .map(|(i, _)| i)
            .collect()
    };
    let feature_cols = cols("f_");
    let vote_cols = cols("r_");
    let count_cols = cols("c_");
    if let Some(unknown) = headers
        .iter()
        .find(|h| *h != "id" && !["f_", "r_", "c_"].iter().any(|p| h.starts_with(p)))
    {
        return Err(csv_err(path, 1, format!("unrecognised column `{unknown}`")));
    }
    if feature_cols.is_empty() {
        return Err(csv_err(path, 1, "no feature columns (prefix `f_`)"));
    }
    match (vote_cols.is_empty(), count_cols.is_empty()) {
        (true, true) => return Err(csv_err(path, 1, "no vote (`r_`) or count (`c_`) columns")),
        (false, false) => return Err(csv_err(path, 1, "use either vote or count columns, not both")),
        _ => {}
    }
    if !count_cols.is_empty() {
        let expected: Vec<String> = (1..=num_classes).map(|k| format!("c_{k}")).collect();
        let got: Vec<&str> = count_cols.iter().map(|i| &headers[*i]).collect();
        if got != expected {
            return Err(csv_err(
                path,
                1,
                format!("count columns must be {} in class order", expected.join(",")),
            ));
        }
    }

    let mut examples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(row as u64 + 2, |p| p.line());
            csv_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        let features = feature_cols
            .iter()
            .map(|&c| {
                record[c].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    csv_err(
                        path,
                        line,
                        format!("column {}: `{}` is not a number", &headers[c], &record[c]),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut votes = Vec::new();
        for &c in &vote_cols {
            let cell = &record[c];
            if cell.is_empty() {
                continue;
            }
            let class: usize = cell
                .parse()
                .map_err(|_| csv_err(path, line, format!("column {}: `{cell}` is not a class", &headers[c])))?;
            votes.push(
                HardLabel::new(class, num_classes)
                    .map_err(|e| csv_err(path, line, format!("column {}: {e}", &headers[c])))?,
            );
        }
        for (k, &c) in count_cols.iter().enumerate() {
            let cell = &record[c];
            let n: usize = if cell.is_empty() {
                0
            } else {
                cell.parse()
                    .map_err(|_| csv_err(path, line, format!("column {}: `{cell}` is not a count", &headers[c])))?
            };
            votes.extend(std::iter::repeat_n(HardLabel::from_index(k), n));
        }
        if votes.is_empty() {
            return Err(csv_err(path, line, "example has no votes"));
        }
        let id = id_col.map_or_else(|| format!("row{}", row + 1), |c| record[c].to_string());
        examples.push(Example { id, features, votes });
    }
    Dataset::new(spec, examples)
}

/// Number of classes implied by a dataset file: the count-column width, or the
/// largest vote seen. The latter undercounts when the top class never occurs.
pub fn infer_num_classes(path: &Path) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    let counts = headers.iter().filter(|h| h.starts_with("c_")).count();
    if counts > 0 {
        return Ok(counts);
    }
    let vote_cols: Vec<usize> = (0..headers.len()).filter(|&i| headers[i].starts_with("r_")).collect();
    let mut max = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, row as u64 + 2, e.to_string()))?;
        for &c in &vote_cols {
            if let Ok(v) = record[c].parse::<usize>() {
                max = max.max(v);
            }
        }
    }
    if max < 2 {
        return Err(csv_err(
            path,
            1,
            "cannot infer the number of classes; pass it explicitly",
        ));
    }
    Ok(max)
}

/// Write a dataset in the `id, f_*, r_*` layout. Examples with fewer votes than
/// the widest one get blank trailing vote cells.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let raters = dataset.examples().iter().map(|e| e.votes.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((1..=dataset.feature_dim()).map(|j| format!("f_{j}")))
        .chain((1..=raters).map(|j| format!("r_{j}")))
        .collect();
    let to_err = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(&header).map_err(to_err)?;
    for e in dataset.examples() {
        let row: Vec<String> = std::iter::once(e.id.clone())
            .chain(e.features.iter().map(|f| f.to_string()))
            .chain((0..raters).map(|j| e.votes.get(j).map_or_else(String::new, |v| v.to_string())))
            .collect();
        w.write_record(&row).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    crate::report::write_atomic(path, &bytes)
}

/// Merge a second annotation round into an example's votes. A lone consensus
/// vote is replicated `replication_factor` times so both rounds weigh equally.
pub fn combine_rater_sets(
    base: &[HardLabel],
    extra: &[HardLabel],
    replication_factor: usize,
) -> Result<Vec<HardLabel>> {
    if replication_factor == 0 {
        return Err(Error::invalid("replication factor must be at least 1"));
    }
    let mut out = if base.len() == 1 {
        vec![base[0]; replication_factor]
    } else {
        base.to_vec()
    };
    out.extend_from_slice(extra);
    Ok(out)
}

/// How examples whose soft label has a tied mode are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieHandling {
    /// Leave tied examples out of evaluation; hard-label training draws one of
    /// the tied classes afresh every epoch.
    #[default]
    Exclude,
    /// Resolve every tie to its lowest class.
    Lowest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TieStatus {
    Resolved(HardLabel),
    Tied(Vec<HardLabel>),
}

impl TieStatus {
    pub fn is_tied(&self) -> bool {
        matches!(self, TieStatus::Tied(_))
    }
}

pub fn resolve_ties(dataset: &Dataset, handling: TieHandling) -> Vec<TieStatus> {
    (0..dataset.len())
        .map(|i| match (dataset.mode(i), handling) {
            (Mode::Tie(classes), TieHandling::Exclude) => TieStatus::Tied(classes),
            (mode, _) => TieStatus::Resolved(mode.lowest()),
        })
        .collect()
}

/// Draws a hard label for tied examples, uniformly over the tied classes.
#[derive(Debug, Clone)]
pub struct TieResampler {
    rng: ChaCha8Rng,
}

impl TieResampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, Stream::TieResample),
        }
    }

    pub fn label(&mut self, status: &TieStatus) -> HardLabel {
        match status {
            TieStatus::Resolved(l) => *l,
            TieStatus::Tied(classes) => classes[self.rng.random_range(0..classes.len())],
        }
    }
}

/// Test-set indices for each fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub folds: Vec<Vec<usize>>,
    pub n_examples: usize,
}

impl FoldSplit {
    pub fn num_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Complement of the fold's test set, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut in_test = vec![false; self.n_examples];
        for &i in &self.folds[fold] {
            in_test[i] = true;
        }
        (0..self.n_examples).filter(|i| !in_test[*i]).collect()
    }
}

fn group_by_label(indices: &[usize], labels: &[HardLabel]) -> BTreeMap<HardLabel, Vec<usize>> {
    let mut groups: BTreeMap<HardLabel, Vec<usize>> = BTreeMap::new();
    for &i in indices {
        groups.entry(labels[i]).or_default().push(i);
    }
    groups
}

/// Shuffle each class's examples and deal them round-robin into `k` folds,
/// continuing the deal from class to class.
pub fn stratified_k_fold(labels: &[HardLabel], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if labels.len() < k {
        return Err(Error::invalid(format!(
            "cannot split {} examples into {k} folds",
            labels.len()
        )));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let groups = group_by_label(&all, labels);
    if let Some(min) = groups.values().map(Vec::len).min() {
        if min < k {
            log::warn!("smallest class has {min} examples; some of the {k} folds will miss it");
        }
    }
    let mut rng = rng::stream(seed, Stream::Folds);
    let mut folds = vec![Vec::new(); k];
    let mut dealt = 0;
    for members in groups.values() {
        for pos in shuffled_indices(members.len(), &mut rng) {
            folds[dealt % k].push(members[pos]);
            dealt += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldSplit {
        folds,
        n_examples: labels.len(),
    })
}

/// Stratified split of `indices` into `(train, validation)`, keeping
/// `round(fraction * n)` of each class for training.
pub fn train_val_split(
    indices: &[usize],
    labels: &[HardLabel],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut rng = rng::stream(seed, Stream::TrainVal);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for members in group_by_label(indices, labels).values() {
        let order = shuffled_indices(members.len(), &mut rng);
        let n_train = (fraction * members.len() as f64).round() as usize;
        for (rank, pos) in order.into_iter().enumerate() {
            if rank < n_train {
                train.push(members[pos]);
            } else {
                val.push(members[pos]);
            }
        }
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid(format!(
            "splitting {} examples at {fraction} leaves an empty side",
            indices.len()
        )));
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(classes: &[usize]) -> Vec<HardLabel> {
        classes.iter().map(|c| HardLabel::from_index(c - 1)).collect()
    }

    fn config(rater_noise_sd: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_examples: 300,
            n_features: 4,
            num_classes: 4,
            n_raters: 3,
            thresholds: vec![-0.8, 0.0, 0.8],
            feature_noise_sd: 0.0,
            rater_noise_sd,
            seed,
        }
    }

    #[test]
    fn noiseless_raters_agree() {
        let d = generate_synthetic(&config(0.0, 1)).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.soft(i).max_prob(), 1.0);
        }
        assert_eq!(d.mean_pairwise_rater_qwk(), Some(1.0));
    }

    #[test]
    fn noiseless_features_determine_the_class() {
        let cfg = config(0.0, 2);
        let d = generate_synthetic(&cfg).unwrap();
        // Features are w z; dividing any coordinate by w recovers z, and
        // thresholding z reproduces every label.
        let mut proj = rng::stream(cfg.seed, Stream::Projection);
        let w0 = normal(&mut proj);
        for (i, e) in d.examples().iter().enumerate() {
            assert_eq!(cfg.class_of(e.features[0] / w0), d.hard(i));
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_synthetic(&config(0.5, 3)).unwrap();
        let b = generate_synthetic(&config(0.5, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic(&config(0.5, 4)).unwrap());
    }

    #[test]
    fn rater_agreement_falls_with_noise() {
        let levels = [0.0, 0.2, 0.4, 0.8, 1.6];
        let mean_qwk: Vec<f64> = levels
            .iter()
            .map(|sd| {
                (0..5)
                    .map(|s| {
                        generate_synthetic(&config(*sd, s))
                            .unwrap()
                            .mean_pairwise_rater_qwk()
                            .unwrap()
                    })
                    .sum::<f64>()
                    / 5.0
            })
            .collect();
        assert_eq!(mean_qwk[0], 1.0);
        assert!(mean_qwk.windows(2).all(|w| w[1] <= w[0]), "{mean_qwk:?}");
    }

    #[test]
    fn config_validation() {
        let mut c = config(0.1, 0);
        c.thresholds = vec![0.0, 0.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = config(0.1, 0);
        c.thresholds.pop();
        assert!(c.validate().is_err());
        let mut c = config(0.1, 0);
        c.rater_noise_sd = -1.0;
        assert!(c.validate().is_err());
    }

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_vote_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "f_1,f_2,r_1,r_2,r_3\n0.1,0.2,2,2,3\n0.5,0.5,1,4,\r\n");
        let d = load_csv(&p, 4).unwrap();
        assert_eq!(d.examples()[0].votes, labels(&[2, 2, 3]));
        let s = d.soft(0).as_slice();
        assert!((s[1] - 2.0 / 3.0).abs() < 1e-15 && (s[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.examples()[1].votes, labels(&[1, 4]));
        assert_eq!(d.examples()[1].id, "row2");
    }

    #[test]
    fn csv_count_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "id,f_1,c_1,c_2,c_3\nx,1.0,0,2,1\n");
        let d = load_csv(&p, 3).unwrap();
        assert_eq!(d.examples()[0].votes, labels(&[2, 2, 3]));
        assert_eq!(d.examples()[0].id, "x");
        let p = write(&dir, "bad.csv", "f_1,c_2,c_1,c_3\n1.0,0,2,1\n");
        assert!(load_csv(&p, 3).is_err());
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "v.csv", "f_1,r_1\n0.1,2\n0.2,5\n");
        let err = load_csv(&p, 4).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
        let p = write(&dir, "e.csv", "f_1,r_1,r_2\n0.1,,\n");
        assert!(matches!(load_csv(&p, 4).unwrap_err(), Error::Csv { line: 2, .. }));
        let p = write(&dir, "n.csv", "f_1,r_1\nabc,1\n");
        assert!(matches!(load_csv(&p, 4).unwrap_err(), Error::Csv { line: 2, .. }));
        let p = write(&dir, "h.csv", "x_1,r_1\n1,1\n");
        assert!(load_csv(&p, 4).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_synthetic(&config(0.3, 9)).unwrap();
        let p = dir.path().join("syn.csv");
        write_csv(&d, &p).unwrap();
        assert_eq!(load_csv(&p, 4).unwrap(), d);
    }

    #[test]
    fn rater_set_combination() {
        assert_eq!(
            combine_rater_sets(&labels(&[2, 2, 3]), &labels(&[2, 3, 3]), 3).unwrap(),
            labels(&[2, 2, 3, 2, 3, 3])
        );
        assert_eq!(
            combine_rater_sets(&labels(&[4]), &labels(&[3, 4, 4]), 3).unwrap(),
            labels(&[4, 4, 4, 3, 4, 4])
        );
        assert_eq!(combine_rater_sets(&labels(&[1, 2]), &[], 1).unwrap(), labels(&[1, 2]));
        assert!(combine_rater_sets(&labels(&[1]), &[], 0).is_err());
    }

    fn dataset(votes: &[&[usize]]) -> Dataset {
        let examples = votes
            .iter()
            .enumerate()
            .map(|(i, v)| Example {
                id: i.to_string(),
                features: vec![i as f64],
                votes: labels(v),
            })
            .collect();
        Dataset::new(ProblemSpec::new(4).unwrap(), examples).unwrap()
    }

    #[test]
    fn ties_are_flagged() {
        let d = dataset(&[&[1, 2], &[2, 2, 3]]);
        let st = resolve_ties(&d, TieHandling::Exclude);
        assert_eq!(st[0], TieStatus::Tied(labels(&[1, 2])));
        assert_eq!(st[1], TieStatus::Resolved(HardLabel::from_index(1)));
        let st = resolve_ties(&d, TieHandling::Lowest);
        assert_eq!(st[0], TieStatus::Resolved(HardLabel::from_index(0)));

        let no_ties = dataset(&[&[1], &[3, 3, 4]]);
        assert!(resolve_ties(&no_ties, TieHandling::Exclude).iter().all(|s| !s.is_tied()));
    }

    #[test]
    fn tie_resampling_is_balanced() {
        let status = TieStatus::Tied(labels(&[1, 2]));
        let mut r = TieResampler::new(5);
        let n = 4000;
        let ones = (0..n).filter(|_| r.label(&status).get() == 1).count() as f64;
        // 3σ binomial band around one half
        let sigma = (0.25 / n as f64).sqrt();
        assert!((ones / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn folds_are_stratified() {
        let mut classes = vec![1; 10];
        classes.extend([2; 10]);
        classes.extend([3; 5]);
        let ls = labels(&classes);
        let split = stratified_k_fold(&ls, 5, 1).unwrap();
        for f in &split.folds {
            let count = |c| f.iter().filter(|i| ls[**i].get() == c).count();
            assert_eq!((count(1), count(2), count(3)), (2, 2, 1));
        }
        let mut all: Vec<usize> = split.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..25).collect::<Vec<_>>());
        assert_eq!(split, stratified_k_fold(&ls, 5, 1).unwrap());
        assert!(stratified_k_fold(&ls, 1, 1).is_err());
        assert_eq!(split.train_indices(0).len(), 20);
    }

    #[test]
    fn train_val_split_examples() {
        let mut classes = vec![1; 10];
        classes.extend([2; 10]);
        let ls = labels(&classes);
        let idx: Vec<usize> = (0..20).collect();
        let (tr, va) = train_val_split(&idx, &ls, 0.8, 3).unwrap();
        assert_eq!(tr.len(), 16);
        assert_eq!(va.iter().filter(|i| ls[**i].get() == 1).count(), 2);
        let mut all = [tr.clone(), va.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, idx);
        assert!(tr.iter().all(|i| !va.contains(i)));
        assert!(train_val_split(&idx, &ls, 1.0, 3).is_err());
        assert_eq!((tr, va), train_val_split(&idx, &ls, 0.8, 3).unwrap());
    }
}
