//! Python bindings for the lexforge toolkit.
//!
//! Exposes the main types and operations — ontology loading, the relation
//! graph with Kosaraju SCCs and seed selection, Fleiss' kappa, PMI-based
//! orientation, bootstrapped expansion, TF-IDF vectorization, the KNN and
//! nearest-centroid classifiers, evaluation, and the full config-driven
//! pipeline — as the `lexforge_py` extension module.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use lexforge::annotation::{AnnotationSet, GoldEntry, GoldStandard, Provenance};
use lexforge::classify::{CentroidModel, KnnModel, Metric, Similarity};
use lexforge::counts::NGramCounts;
use lexforge::docpipe::{
    self, FeatureVector, GlossDocument, IdentityStemmer, LexiconTagger, NullTagger, PosTagger,
    Preprocessor, Stemmer, SuffixRuleStemmer, Vocabulary,
};
use lexforge::evaluate;
use lexforge::expansion::{self, Algorithm, ExpansionConfig};
use lexforge::label::Label;
use lexforge::ontology::{LoadMode, PartOfSpeech, RelationKind};
use lexforge::pipeline::{self, PipelineConfig, PipelineOutcome};
use lexforge::seedgraph;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn parse_label(s: &str) -> PyResult<Label> {
    s.parse::<Label>().map_err(value_err)
}

fn parse_kind(s: &str) -> PyResult<RelationKind> {
    s.parse::<RelationKind>().map_err(value_err)
}

/// A loaded wordnet-style ontology.
#[pyclass(name = "Ontology")]
struct PyOntology {
    inner: lexforge::Ontology,
}

#[pymethods]
impl PyOntology {
    /// Load a JSON Lines ontology file.
    #[staticmethod]
    #[pyo3(signature = (path, lenient=false))]
    fn load(path: PathBuf, lenient: bool) -> PyResult<Self> {
        let mode = if lenient {
            LoadMode::Lenient
        } else {
            LoadMode::Strict
        };
        let inner = lexforge::Ontology::load(&path, mode).map_err(value_err)?;
        Ok(PyOntology { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.ids().map(str::to_string).collect()
    }

    fn contains(&self, id: &str) -> bool {
        self.inner.contains(id)
    }

    /// (pos, senses, gloss, examples) of one synset.
    fn synset(&self, id: &str) -> PyResult<(String, Vec<String>, String, Vec<String>)> {
        let synset = self
            .inner
            .get(id)
            .ok_or_else(|| value_err(format!("unknown synset `{id}`")))?;
        Ok((
            synset.pos.to_string(),
            synset.senses.clone(),
            synset.gloss.clone(),
            synset.examples.clone(),
        ))
    }

    /// Synset counts per part of speech and relation counts per kind.
    fn stats(&self) -> (BTreeMap<String, usize>, BTreeMap<String, usize>) {
        let stats = self.inner.stats();
        (
            stats
                .by_pos
                .iter()
                .map(|(p, c)| (p.to_string(), *c))
                .collect(),
            stats
                .by_relation
                .iter()
                .map(|(k, c)| (k.to_string(), *c))
                .collect(),
        )
    }

    fn warnings(&self) -> Vec<String> {
        self.inner.meta().warnings.clone()
    }

    /// Gloss document text: gloss + senses + examples.
    fn document_text(&self, id: &str) -> PyResult<String> {
        let synset = self
            .inner
            .get(id)
            .ok_or_else(|| value_err(format!("unknown synset `{id}`")))?;
        Ok(docpipe::synset_to_document(synset))
    }

    fn __repr__(&self) -> String {
        format!("Ontology({} synsets)", self.inner.len())
    }
}

/// Directed relation graph over synset ids.
#[pyclass(name = "PolarityGraph")]
struct PyPolarityGraph {
    inner: seedgraph::PolarityGraph,
}

#[pymethods]
impl PyPolarityGraph {
    /// Build from an ontology, keeping the named relation kinds as edges.
    #[staticmethod]
    #[pyo3(signature = (ontology, relations=vec!["antonym".into()], symmetrize=true))]
    fn build(ontology: &PyOntology, relations: Vec<String>, symmetrize: bool) -> PyResult<Self> {
        let kinds = relations
            .iter()
            .map(|k| parse_kind(k))
            .collect::<PyResult<_>>()?;
        Ok(PyPolarityGraph {
            inner: seedgraph::PolarityGraph::build(&ontology.inner, &kinds, symmetrize),
        })
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(String, String, String)> {
        self.inner
            .edges()
            .map(|(s, d, k)| (s.to_string(), d.to_string(), k.to_string()))
            .collect()
    }

    /// Strongly connected components via Kosaraju's algorithm.
    fn kosaraju(&self) -> PySccPartition {
        PySccPartition {
            inner: self.inner.kosaraju(),
        }
    }

    /// (covered, uncovered) node lists for a seed list.
    #[pyo3(signature = (seeds, min_size=2))]
    fn check_seed_coverage(
        &self,
        seeds: Vec<String>,
        min_size: usize,
    ) -> PyResult<(Vec<String>, Vec<String>)> {
        let report = self
            .inner
            .check_seed_coverage(&seeds, min_size)
            .map_err(value_err)?;
        Ok((
            report.covered.iter().cloned().collect(),
            report.uncovered.clone(),
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "PolarityGraph({} nodes, {} edges)",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// Disjoint strongly connected components of a graph.
#[pyclass(name = "SccPartition")]
struct PySccPartition {
    inner: seedgraph::SccPartition,
}

#[pymethods]
impl PySccPartition {
    fn components(&self) -> Vec<Vec<String>> {
        self.inner.components().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Component counts per size bucket (1, 2-5, 6-10, 11-15, 16+).
    fn histogram(&self) -> BTreeMap<String, usize> {
        self.inner
            .histogram()
            .into_iter()
            .map(|(bucket, count)| (bucket.to_string(), count))
            .collect()
    }

    /// Smallest-id seed per component of size >= min_size.
    #[pyo3(signature = (min_size=2))]
    fn select_seeds(&self, min_size: usize) -> Vec<String> {
        self.inner.select_seeds(min_size)
    }

    /// Uniformly random seed per qualifying component, deterministic for a
    /// given rng seed.
    #[pyo3(signature = (min_size=2, rng_seed=42))]
    fn select_seeds_random(&self, min_size: usize, rng_seed: u64) -> Vec<String> {
        self.inner.select_seeds_random(min_size, rng_seed)
    }
}

/// Unigram/bigram corpus counts for PMI.
#[pyclass(name = "NGramCounts")]
struct PyNGramCounts {
    inner: NGramCounts,
}

#[pymethods]
impl PyNGramCounts {
    #[staticmethod]
    fn load(unigrams: PathBuf, bigrams: PathBuf) -> PyResult<Self> {
        Ok(PyNGramCounts {
            inner: NGramCounts::load(&unigrams, &bigrams).map_err(io_err)?,
        })
    }

    /// Build from in-memory dictionaries. Bigram keys are "token1 token2".
    #[staticmethod]
    fn from_dicts(
        unigrams: BTreeMap<String, u64>,
        bigrams: BTreeMap<String, u64>,
        total_tokens: u64,
    ) -> PyResult<Self> {
        let mut pairs = std::collections::HashMap::new();
        for (key, count) in bigrams {
            let (a, b) = key
                .split_once(' ')
                .ok_or_else(|| value_err(format!("bigram key `{key}` must be `tok1 tok2`")))?;
            pairs.insert((a.to_string(), b.to_string()), count);
        }
        Ok(PyNGramCounts {
            inner: NGramCounts::from_parts(unigrams.into_iter().collect(), pairs, total_tokens)
                .map_err(value_err)?,
        })
    }

    fn unigram(&self, token: &str) -> Option<u64> {
        self.inner.unigram(token)
    }

    fn bigram(&self, a: &str, b: &str) -> Option<u64> {
        self.inner.bigram_both_orders(a, b)
    }

    fn total_tokens(&self) -> u64 {
        self.inner.total_tokens()
    }
}

/// TF-IDF vectorizer over a fixed document collection.
#[pyclass(name = "Vectorizer")]
struct PyVectorizer {
    vocabulary: Vocabulary,
}

fn doc_from_tokens(id: &str, tokens: Vec<String>) -> GlossDocument {
    GlossDocument {
        id: id.to_string(),
        text: tokens.join(" "),
        tokens,
        label: None,
    }
}

#[pymethods]
impl PyVectorizer {
    /// Build the vocabulary from a list of token lists.
    #[new]
    fn new(documents: Vec<Vec<String>>) -> Self {
        let docs: Vec<GlossDocument> = documents
            .into_iter()
            .enumerate()
            .map(|(i, tokens)| doc_from_tokens(&format!("doc{i}"), tokens))
            .collect();
        PyVectorizer {
            vocabulary: Vocabulary::build(&docs),
        }
    }

    fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    fn n_docs(&self) -> usize {
        self.vocabulary.n_docs()
    }

    fn index_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.index_of(term)
    }

    /// L2-normalized sparse TF-IDF vector as (index, weight) pairs.
    fn vectorize(&self, tokens: Vec<String>) -> Vec<(usize, f64)> {
        docpipe::vectorize(&doc_from_tokens("query", tokens), &self.vocabulary)
            .weights()
            .to_vec()
    }

    fn checksum(&self) -> String {
        self.vocabulary.checksum()
    }
}

fn to_feature_vector(id: String, weights: Vec<(usize, f64)>) -> FeatureVector {
    FeatureVector::from_parts(id, weights)
}

/// K-nearest-neighbors classifier over sparse vectors.
#[pyclass(name = "KnnClassifier")]
struct PyKnnClassifier {
    model: Option<KnnModel>,
    k: usize,
    metric: Metric,
}

#[pymethods]
impl PyKnnClassifier {
    #[new]
    #[pyo3(signature = (k=1, metric="cosine-distance"))]
    fn new(k: usize, metric: &str) -> PyResult<Self> {
        Ok(PyKnnClassifier {
            model: None,
            k,
            metric: metric.parse::<Metric>().map_err(value_err)?,
        })
    }

    fn fit(&mut self, vectors: Vec<Vec<(usize, f64)>>, labels: Vec<String>) -> PyResult<()> {
        if vectors.len() != labels.len() {
            return Err(value_err("vectors and labels must have the same length"));
        }
        let data: Vec<(FeatureVector, Label)> = vectors
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (weights, label))| {
                Ok((
                    to_feature_vector(format!("train{i}"), weights),
                    parse_label(&label)?,
                ))
            })
            .collect::<PyResult<_>>()?;
        self.model = Some(KnnModel::train(&data, self.k, self.metric).map_err(value_err)?);
        Ok(())
    }

    fn predict(&self, vector: Vec<(usize, f64)>) -> PyResult<String> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| value_err("classifier is not fitted"))?;
        Ok(model
            .predict(&to_feature_vector("query".into(), vector))
            .to_string())
    }
}

/// Nearest-centroid (Rocchio) classifier over sparse vectors.
#[pyclass(name = "CentroidClassifier")]
struct PyCentroidClassifier {
    model: Option<CentroidModel>,
    similarity: Similarity,
}

#[pymethods]
impl PyCentroidClassifier {
    #[new]
    #[pyo3(signature = (similarity="cosine"))]
    fn new(similarity: &str) -> PyResult<Self> {
        Ok(PyCentroidClassifier {
            model: None,
            similarity: similarity.parse::<Similarity>().map_err(value_err)?,
        })
    }

    fn fit(&mut self, vectors: Vec<Vec<(usize, f64)>>, labels: Vec<String>) -> PyResult<()> {
        if vectors.len() != labels.len() {
            return Err(value_err("vectors and labels must have the same length"));
        }
        let data: Vec<(FeatureVector, Label)> = vectors
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (weights, label))| {
                Ok((
                    to_feature_vector(format!("train{i}"), weights),
                    parse_label(&label)?,
                ))
            })
            .collect::<PyResult<_>>()?;
        self.model = Some(CentroidModel::train(&data, self.similarity).map_err(value_err)?);
        Ok(())
    }

    fn predict(&self, vector: Vec<(usize, f64)>) -> PyResult<String> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| value_err("classifier is not fitted"))?;
        Ok(model
            .predict(&to_feature_vector("query".into(), vector))
            .to_string())
    }
}

/// Fleiss' kappa over an annotators-by-items label table.
#[pyfunction]
fn fleiss_kappa(table: Vec<Vec<String>>) -> PyResult<f64> {
    let sheets = table
        .iter()
        .enumerate()
        .map(|(a, row)| {
            let labels = row
                .iter()
                .enumerate()
                .map(|(i, l)| Ok((format!("item{i:05}"), parse_label(l)?)))
                .collect::<PyResult<Vec<_>>>()?;
            Ok((format!("annotator{a}"), labels))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let set = AnnotationSet::from_sheets(sheets).map_err(value_err)?;
    set.fleiss_kappa().map_err(value_err)
}

/// Sentence/word tokenization with punctuation dropped.
#[pyfunction]
fn tokenize(text: &str) -> Vec<Vec<String>> {
    docpipe::tokenize(text)
}

/// Preprocess text through optional suffix-strip rules and a tag lexicon.
#[pyfunction]
#[pyo3(signature = (text, stemmer_rules=None, tagger_lexicon=None, keep_pos=None))]
fn preprocess(
    text: &str,
    stemmer_rules: Option<PathBuf>,
    tagger_lexicon: Option<PathBuf>,
    keep_pos: Option<Vec<String>>,
) -> PyResult<Vec<String>> {
    let stemmer: Box<dyn Stemmer + Send + Sync> = match stemmer_rules {
        Some(path) => Box::new(SuffixRuleStemmer::from_file(&path).map_err(io_err)?),
        None => Box::new(IdentityStemmer),
    };
    let tagger: Box<dyn PosTagger + Send + Sync> = match tagger_lexicon {
        Some(path) => Box::new(LexiconTagger::from_file(&path).map_err(io_err)?),
        None => Box::new(NullTagger),
    };
    let keep = match keep_pos {
        None => Preprocessor::default_keep_pos(),
        Some(list) => list
            .iter()
            .map(|p| p.parse::<PartOfSpeech>().map_err(value_err))
            .collect::<PyResult<_>>()?,
    };
    Preprocessor::new(stemmer, tagger, keep)
        .process_text(text)
        .map_err(value_err)
}

/// Label implied across one relation: antonymy flips the sign.
#[pyfunction]
fn implied_label(label: &str, kind: &str) -> PyResult<String> {
    Ok(expansion::implied_label(parse_label(label)?, parse_kind(kind)?).to_string())
}

/// Pointwise mutual information in bits, or None when counts are missing.
#[pyfunction]
fn pmi(a: &str, b: &str, counts: &PyNGramCounts) -> Option<f64> {
    expansion::pmi(a, b, &counts.inner)
}

/// Semantic orientation: PMI toward the positive seeds minus PMI toward
/// the negative seeds.
#[pyfunction]
#[pyo3(signature = (term, counts, positive=vec!["good".into()], negative=vec!["bad".into()]))]
fn so_pmi(
    term: &str,
    counts: &PyNGramCounts,
    positive: Vec<String>,
    negative: Vec<String>,
) -> Option<f64> {
    expansion::so_pmi(term, &positive, &negative, &counts.inner)
}

/// Bootstrapped expansion of a hand-labeled seed. Returns
/// {id: (label, round, source)}.
#[pyfunction]
#[pyo3(signature = (ontology, seed, case=1, algorithm="default", counts=None, max_rounds=0, neutral_propagates=true))]
fn expand(
    ontology: &PyOntology,
    seed: BTreeMap<String, String>,
    case: u8,
    algorithm: &str,
    counts: Option<&PyNGramCounts>,
    max_rounds: usize,
    neutral_propagates: bool,
) -> PyResult<BTreeMap<String, (String, u32, String)>> {
    let algorithm = algorithm.parse::<Algorithm>().map_err(value_err)?;
    let mut config = ExpansionConfig::case(case, algorithm)
        .ok_or_else(|| value_err(format!("case must be 1, 2, or 3 (got {case})")))?;
    config.max_rounds = max_rounds;
    config.neutral_propagates = neutral_propagates;

    let hand = seed
        .into_iter()
        .map(|(id, label)| Ok((id, parse_label(&label)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let seed = expansion::LabeledSeed::from_hand_labels(hand);
    let expanded = expansion::expand(
        &ontology.inner,
        &seed,
        &config,
        counts.map(|c| &c.inner),
    )
    .map_err(value_err)?;
    Ok(expanded
        .iter()
        .map(|(id, entry)| {
            (
                id.to_string(),
                (
                    entry.label.to_string(),
                    entry.round,
                    entry.source.as_str().to_string(),
                ),
            )
        })
        .collect())
}

/// (accuracy, macro_f, {label: (precision, recall, f1)}, confusion rows).
type EvalSummary = (f64, f64, BTreeMap<String, (f64, f64, f64)>, Vec<Vec<usize>>);

/// Score predictions against gold labels.
#[pyfunction]
fn evaluate_labels(
    gold: BTreeMap<String, String>,
    predictions: BTreeMap<String, String>,
) -> PyResult<EvalSummary> {
    let gold_entries = gold
        .into_iter()
        .map(|(id, label)| {
            Ok((
                id,
                GoldEntry {
                    label: parse_label(&label)?,
                    provenance: Provenance::Agreed,
                },
            ))
        })
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    let gold = GoldStandard::from_entries(gold_entries);
    let predictions = predictions
        .into_iter()
        .map(|(id, label)| Ok((id, parse_label(&label)?)))
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    let report = evaluate::evaluate(&predictions, &gold).map_err(value_err)?;
    Ok((
        report.accuracy,
        report.macro_f,
        report
            .per_category
            .iter()
            .map(|(label, s)| (label.to_string(), (s.precision, s.recall, s.f1)))
            .collect(),
        report.confusion.iter().map(|row| row.to_vec()).collect(),
    ))
}

/// Outcome of a config-driven pipeline run.
#[pyclass(name = "PipelineResult")]
struct PyPipelineResult {
    #[pyo3(get)]
    completed: bool,
    #[pyo3(get)]
    message: String,
    #[pyo3(get)]
    out_dir: String,
    #[pyo3(get)]
    lexicon_path: String,
    #[pyo3(get)]
    selected_dataset: String,
    #[pyo3(get)]
    selected_classifier: String,
    #[pyo3(get)]
    stages_run: Vec<String>,
    #[pyo3(get)]
    stages_skipped: Vec<String>,
}

/// Run the whole pipeline from a project TOML.
#[pyfunction]
fn run_pipeline(config_path: PathBuf) -> PyResult<PyPipelineResult> {
    let config = PipelineConfig::load(&config_path).map_err(value_err)?;
    match pipeline::run_pipeline(&config).map_err(value_err)? {
        PipelineOutcome::Completed(summary) => Ok(PyPipelineResult {
            completed: true,
            message: String::new(),
            out_dir: summary.out_dir.display().to_string(),
            lexicon_path: summary.lexicon_path.display().to_string(),
            selected_dataset: summary.selected.dataset.clone(),
            selected_classifier: summary.selected.classifier.to_string(),
            stages_run: summary.stages_run,
            stages_skipped: summary.stages_skipped,
        }),
        PipelineOutcome::AwaitingAnnotation { sheet, message } => Ok(PyPipelineResult {
            completed: false,
            message,
            out_dir: String::new(),
            lexicon_path: String::new(),
            selected_dataset: String::new(),
            selected_classifier: String::new(),
            stages_run: vec![sheet.display().to_string()],
            stages_skipped: vec![],
        }),
    }
}

/// Validate a project config; returns (is_valid, problems).
#[pyfunction]
fn validate_config(config_path: PathBuf) -> PyResult<(bool, Vec<String>)> {
    let report = pipeline::validate_config(&config_path).map_err(value_err)?;
    Ok((report.is_valid(), report.problems))
}

#[pymodule]
fn lexforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyOntology>()?;
    m.add_class::<PyPolarityGraph>()?;
    m.add_class::<PySccPartition>()?;
    m.add_class::<PyNGramCounts>()?;
    m.add_class::<PyVectorizer>()?;
    m.add_class::<PyKnnClassifier>()?;
    m.add_class::<PyCentroidClassifier>()?;
    m.add_class::<PyPipelineResult>()?;
    m.add_function(wrap_pyfunction!(fleiss_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(implied_label, m)?)?;
    m.add_function(wrap_pyfunction!(pmi, m)?)?;
    m.add_function(wrap_pyfunction!(so_pmi, m)?)?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_labels, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    Ok(())
}
