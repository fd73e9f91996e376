//! Lazy classifiers over TF-IDF vectors: K-nearest neighbors and nearest
//! centroid (Rocchio), with deterministic stratified cross-validation for
//! parameter tuning.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::docpipe::{vectorize, FeatureVector, GlossDocument, Vocabulary};
use crate::evaluate::{ClassifierKind, EvalReport};
use crate::label::Label;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("k = {k} exceeds the {n} training vectors")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("cross-validation needs at least 2 folds (got {0})")]
    TooFewFolds(usize),
    #[error("dataset of {n} items is smaller than {folds} folds")]
    DatasetSmallerThanFolds { n: usize, folds: usize },
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("no grid assignment is trainable on this dataset")]
    NothingTrainable,
    #[error("model file vocabulary checksum mismatch: stored {stored}, computed {computed}")]
    VocabularyMismatch { stored: String, computed: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Distance used by KNN.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    CosineDistance,
    Euclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::CosineDistance => "cosine-distance",
            Metric::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine-distance" | "cosine" => Ok(Metric::CosineDistance),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(format!(
                "unknown metric `{other}` (expected cosine-distance or euclidean)"
            )),
        }
    }
}

/// Similarity used by the nearest-centroid classifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    Cosine,
    NegativeEuclidean,
}

impl Similarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Similarity::Cosine => "cosine",
            Similarity::NegativeEuclidean => "negative-euclidean",
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Similarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Similarity::Cosine),
            "negative-euclidean" => Ok(Similarity::NegativeEuclidean),
            other => Err(format!(
                "unknown similarity `{other}` (expected cosine or negative-euclidean)"
            )),
        }
    }
}

fn norm(weights: &[(usize, f64)]) -> f64 {
    weights.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut sum = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

fn sparse_euclidean(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut sum = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ai, aw)), Some(&(bi, bw))) => match ai.cmp(&bi) {
                std::cmp::Ordering::Less => {
                    sum += aw * aw;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += bw * bw;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = aw - bw;
                    sum += d * d;
                    i += 1;
                    j += 1;
                }
            },
            (Some(&(_, aw)), None) => {
                sum += aw * aw;
                i += 1;
            }
            (None, Some(&(_, bw))) => {
                sum += bw * bw;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    sum.sqrt()
}

/// Cosine similarity; zero when either vector has zero norm.
fn cosine_similarity(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    sparse_dot(a, b) / (na * nb)
}

/// Cosine distance; maximal (2.0) when either vector has zero norm.
fn cosine_distance(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 2.0;
    }
    1.0 - sparse_dot(a, b) / (na * nb)
}

/// Most frequent label; frequency ties resolve to the smallest label in the
/// fixed order negative < neutral < positive.
fn majority_label(labels: &[Label]) -> Label {
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for &label in labels {
        *counts.entry(label).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by_key(|&(label, count)| (count, std::cmp::Reverse(label)))
        .map(|(label, _)| label)
        .unwrap_or(Label::Neutral)
}

/// KNN: stores the training vectors and votes among the k nearest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    vectors: Vec<FeatureVector>,
    labels: Vec<Label>,
    k: usize,
    metric: Metric,
    majority: Label,
}

impl KnnModel {
    pub fn train(
        dataset: &[(FeatureVector, Label)],
        k: usize,
        metric: Metric,
    ) -> Result<KnnModel, ClassifyError> {
        if dataset.is_empty() {
            return Err(ClassifyError::EmptyDataset);
        }
        if k == 0 {
            return Err(ClassifyError::KZero);
        }
        if k > dataset.len() {
            return Err(ClassifyError::KTooLarge {
                k,
                n: dataset.len(),
            });
        }
        let labels: Vec<Label> = dataset.iter().map(|(_, l)| *l).collect();
        Ok(KnnModel {
            vectors: dataset.iter().map(|(v, _)| v.clone()).collect(),
            labels: labels.clone(),
            k,
            metric,
            majority: majority_label(&labels),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn training_size(&self) -> usize {
        self.vectors.len()
    }

    pub fn predict(&self, query: &FeatureVector) -> Label {
        if query.is_empty() {
            return self.majority;
        }
        // (distance, training index); ties resolve to the smaller index.
        let mut scored: Vec<(f64, usize)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = match self.metric {
                    Metric::CosineDistance => cosine_distance(query.weights(), v.weights()),
                    Metric::Euclidean => sparse_euclidean(query.weights(), v.weights()),
                };
                (d, i)
            })
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let neighbors = &scored[..self.k];

        let mut votes: BTreeMap<Label, usize> = BTreeMap::new();
        for &(_, i) in neighbors {
            *votes.entry(self.labels[i]).or_insert(0) += 1;
        }
        let top = votes.values().copied().max().unwrap_or(0);
        let tied: Vec<Label> = votes
            .iter()
            .filter(|(_, &c)| c == top)
            .map(|(&l, _)| l)
            .collect();
        if tied.len() == 1 {
            return tied[0];
        }
        // Vote tie: the nearest neighbor whose label is among the tied ones.
        for &(_, i) in neighbors {
            if tied.contains(&self.labels[i]) {
                return self.labels[i];
            }
        }
        tied[0]
    }
}

/// Nearest centroid: one un-normalized mean vector per category.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidModel {
    centroids: BTreeMap<Label, Vec<(usize, f64)>>,
    similarity: Similarity,
    majority: Label,
}

impl CentroidModel {
    pub fn train(
        dataset: &[(FeatureVector, Label)],
        similarity: Similarity,
    ) -> Result<CentroidModel, ClassifyError> {
        if dataset.is_empty() {
            return Err(ClassifyError::EmptyDataset);
        }
        let mut sums: BTreeMap<Label, (BTreeMap<usize, f64>, usize)> = BTreeMap::new();
        for (vector, label) in dataset {
            let slot = sums.entry(*label).or_default();
            for &(i, w) in vector.weights() {
                *slot.0.entry(i).or_insert(0.0) += w;
            }
            slot.1 += 1;
        }
        let centroids = sums
            .into_iter()
            .map(|(label, (sum, count))| {
                let centroid: Vec<(usize, f64)> = sum
                    .into_iter()
                    .map(|(i, w)| (i, w / count as f64))
                    .collect();
                (label, centroid)
            })
            .collect();
        let labels: Vec<Label> = dataset.iter().map(|(_, l)| *l).collect();
        Ok(CentroidModel {
            centroids,
            similarity,
            majority: majority_label(&labels),
        })
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    pub fn centroid(&self, label: Label) -> Option<&[(usize, f64)]> {
        self.centroids.get(&label).map(|c| c.as_slice())
    }

    pub fn predict(&self, query: &FeatureVector) -> Label {
        if query.is_empty() {
            return self.majority;
        }
        let mut best: Option<(Label, f64)> = None;
        // BTreeMap iteration order is the fixed label order, so strict
        // comparison keeps the earliest label on similarity ties.
        for (&label, centroid) in &self.centroids {
            let s = match self.similarity {
                Similarity::Cosine => cosine_similarity(query.weights(), centroid),
                Similarity::NegativeEuclidean => {
                    -sparse_euclidean(query.weights(), centroid)
                }
            };
            match best {
                Some((_, bs)) if s <= bs => {}
                _ => best = Some((label, s)),
            }
        }
        best.map(|(l, _)| l).unwrap_or(self.majority)
    }
}

/// One grid point: either a KNN or a centroid parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "classifier")]
pub enum ParamSet {
    Knn { k: usize, metric: Metric },
    Centroid { similarity: Similarity },
}

impl ParamSet {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ParamSet::Knn { .. } => ClassifierKind::Knn,
            ParamSet::Centroid { .. } => ClassifierKind::Centroid,
        }
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSet::Knn { k, metric } => write!(f, "knn k={k} metric={metric}"),
            ParamSet::Centroid { similarity } => {
                write!(f, "centroid similarity={similarity}")
            }
        }
    }
}

/// k in {1,3,5,7,9,15,21,31} crossed with both metrics.
pub fn default_knn_grid() -> Vec<ParamSet> {
    let mut grid = Vec::new();
    for k in [1usize, 3, 5, 7, 9, 15, 21, 31] {
        for metric in [Metric::CosineDistance, Metric::Euclidean] {
            grid.push(ParamSet::Knn { k, metric });
        }
    }
    grid
}

pub fn default_centroid_grid() -> Vec<ParamSet> {
    vec![
        ParamSet::Centroid {
            similarity: Similarity::Cosine,
        },
        ParamSet::Centroid {
            similarity: Similarity::NegativeEuclidean,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    Accuracy,
    MacroF,
}

impl std::str::FromStr for ScoreKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accuracy" => Ok(ScoreKind::Accuracy),
            "macro-f" => Ok(ScoreKind::MacroF),
            other => Err(format!(
                "unknown score `{other}` (expected accuracy or macro-f)"
            )),
        }
    }
}

fn score_of(report: &EvalReport, kind: ScoreKind) -> f64 {
    match kind {
        ScoreKind::Accuracy => report.accuracy,
        ScoreKind::MacroF => report.macro_f,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TuningResult {
    pub best: ParamSet,
    /// Mean held-out score per evaluated assignment, in canonical grid
    /// order. Untrainable assignments are absent.
    pub mean_scores: Vec<(ParamSet, f64)>,
    pub folds: usize,
    pub score: ScoreKind,
    pub warnings: Vec<String>,
}

/// Deterministic stratified fold assignment: items sorted by id within each
/// category and dealt round-robin. Returns one fold index per dataset item.
pub fn stratified_folds(
    dataset: &[(FeatureVector, Label)],
    folds: usize,
) -> (Vec<usize>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut assignment = vec![0usize; dataset.len()];
    for label in Label::ALL {
        let mut members: Vec<usize> = dataset
            .iter()
            .enumerate()
            .filter(|(_, (_, l))| *l == label)
            .map(|(i, _)| i)
            .collect();
        members.sort_by(|&a, &b| dataset[a].0.id.cmp(&dataset[b].0.id));
        if !members.is_empty() && members.len() < folds {
            warnings.push(format!(
                "category `{label}` has {} members, fewer than {folds} folds; \
                 it cannot appear in every fold",
                members.len()
            ));
        }
        for (i, &item) in members.iter().enumerate() {
            assignment[item] = i % folds;
        }
    }
    (assignment, warnings)
}

fn train_and_predict(
    params: &ParamSet,
    train: &[(FeatureVector, Label)],
    test: &[(FeatureVector, Label)],
) -> Result<Vec<(Label, Label)>, ClassifyError> {
    match params {
        ParamSet::Knn { k, metric } => {
            let model = KnnModel::train(train, *k, *metric)?;
            Ok(test
                .iter()
                .map(|(v, gold)| (*gold, model.predict(v)))
                .collect())
        }
        ParamSet::Centroid { similarity } => {
            let model = CentroidModel::train(train, *similarity)?;
            Ok(test
                .iter()
                .map(|(v, gold)| (*gold, model.predict(v)))
                .collect())
        }
    }
}

/// Grid search with stratified k-fold cross-validation. The best assignment
/// maximizes the mean held-out score; ties resolve to the canonically
/// smallest assignment (smallest k, then metric order).
pub fn cross_validate(
    dataset: &[(FeatureVector, Label)],
    grid: &[ParamSet],
    folds: usize,
    score: ScoreKind,
) -> Result<TuningResult, ClassifyError> {
    if folds < 2 {
        return Err(ClassifyError::TooFewFolds(folds));
    }
    if dataset.len() < folds {
        return Err(ClassifyError::DatasetSmallerThanFolds {
            n: dataset.len(),
            folds,
        });
    }
    if grid.is_empty() {
        return Err(ClassifyError::EmptyGrid);
    }

    let mut canonical: Vec<ParamSet> = grid.to_vec();
    canonical.sort();
    canonical.dedup();

    let (assignment, mut warnings) = stratified_folds(dataset, folds);

    let mut mean_scores: Vec<(ParamSet, f64)> = Vec::new();
    for params in &canonical {
        let mut fold_scores = Vec::with_capacity(folds);
        let mut trainable = true;
        for fold in 0..folds {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, item) in dataset.iter().enumerate() {
                if assignment[i] == fold {
                    test.push(item.clone());
                } else {
                    train.push(item.clone());
                }
            }
            match train_and_predict(params, &train, &test) {
                Ok(pairs) => {
                    fold_scores.push(score_of(&EvalReport::from_pairs(pairs), score));
                }
                Err(ClassifyError::KTooLarge { k, n }) => {
                    warnings.push(format!(
                        "skipping `{params}`: k = {k} exceeds fold training size {n}"
                    ));
                    trainable = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if trainable {
            let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            mean_scores.push((*params, mean));
        }
    }

    if mean_scores.is_empty() {
        return Err(ClassifyError::NothingTrainable);
    }
    // Strictly-greater keeps the canonically smallest assignment on ties.
    let mut best = mean_scores[0];
    for &(params, mean) in &mean_scores[1..] {
        if mean > best.1 {
            best = (params, mean);
        }
    }

    Ok(TuningResult {
        best: best.0,
        mean_scores,
        folds,
        score,
        warnings,
    })
}

/// A trained classifier bundled with the vocabulary that produced its
/// vectors, ready to label new documents.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub vocabulary: Vocabulary,
    pub params: ParamSet,
    pub dataset_name: String,
    classifier: ClassifierImpl,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
enum ClassifierImpl {
    Knn(KnnModel),
    Centroid(CentroidModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    params: ParamSet,
    dataset: String,
    vocab_checksum: String,
    vocabulary: Vocabulary,
    classifier: ClassifierImpl,
}

impl TrainedModel {
    pub fn train(
        vocabulary: Vocabulary,
        dataset: &[(FeatureVector, Label)],
        params: ParamSet,
        dataset_name: impl Into<String>,
    ) -> Result<TrainedModel, ClassifyError> {
        let classifier = match params {
            ParamSet::Knn { k, metric } => {
                ClassifierImpl::Knn(KnnModel::train(dataset, k, metric)?)
            }
            ParamSet::Centroid { similarity } => {
                ClassifierImpl::Centroid(CentroidModel::train(dataset, similarity)?)
            }
        };
        Ok(TrainedModel {
            vocabulary,
            params,
            dataset_name: dataset_name.into(),
            classifier,
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    pub fn predict(&self, vector: &FeatureVector) -> Label {
        match &self.classifier {
            ClassifierImpl::Knn(m) => m.predict(vector),
            ClassifierImpl::Centroid(m) => m.predict(vector),
        }
    }

    /// Vectorize with the embedded vocabulary, then predict.
    pub fn predict_document(&self, document: &GlossDocument) -> Label {
        self.predict(&vectorize(document, &self.vocabulary))
    }

    /// Self-describing JSON, keyed by the vocabulary checksum.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
        let path = path.as_ref();
        let file = ModelFile {
            params: self.params,
            dataset: self.dataset_name.clone(),
            vocab_checksum: self.vocabulary.checksum(),
            vocabulary: self.vocabulary.clone(),
            classifier: self.classifier.clone(),
        };
        let body = serde_json::to_string(&file).expect("model serializes");
        fs::write(path, body).map_err(|source| ClassifyError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Load and verify: a vocabulary whose recomputed checksum differs from
    /// the stored one is refused.
    pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel, ClassifyError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| ClassifyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file: ModelFile =
            serde_json::from_str(&body).map_err(|e| ClassifyError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        file.vocabulary.rebuild_index();
        let computed = file.vocabulary.checksum();
        if computed != file.vocab_checksum {
            return Err(ClassifyError::VocabularyMismatch {
                stored: file.vocab_checksum,
                computed,
            });
        }
        Ok(TrainedModel {
            vocabulary: file.vocabulary,
            params: file.params,
            dataset_name: file.dataset,
            classifier: file.classifier,
        })
    }
}
