//! Config-driven orchestration of the whole pipeline with stage caching.
//!
//! Every stage reads its inputs from files and writes its artifacts plus a
//! manifest of input/output checksums; a stage whose manifest still matches
//! is skipped, which also makes the annotate-pause-resume workflow cheap.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotation::{self, GoldStandard};
use crate::classify::{
    cross_validate, ParamSet, ScoreKind, TrainedModel,
};
use crate::counts::NGramCounts;
use crate::docpipe::{
    load_documents, save_documents, vectorize, FeatureVector, GlossDocument, IdentityStemmer,
    LexiconTagger, NullTagger, PosTagger, Preprocessor, Stemmer, SuffixRuleStemmer, Vocabulary,
};
use crate::evaluate::{
    aggregate_by, evaluate, ClassifierKind, Grouping, RunInfo, RunMatrix, RunReport,
};
use crate::expansion::{generate_training_matrix, Algorithm, ExpansionConfig, LabeledSeed};
use crate::label::Label;
use crate::lexicon::{build_lexicon, BuildMetadata, LexiconFormat};
use crate::logging;
use crate::ontology::{LoadMode, Ontology, PartOfSpeech};
use crate::seedgraph::{PolarityGraph, SccPartition};
use crate::RelationKind;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {message}")]
    Config { message: String },
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_err(message: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        message: message.into(),
    }
}

/// Which training datasets the expansion stage generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionPreset {
    /// All six datasets (cases 1..3, both algorithms).
    Matrix,
    Case1,
    Case2,
    Case3,
}

impl ExpansionPreset {
    fn cases(self) -> Vec<u8> {
        match self {
            ExpansionPreset::Matrix => vec![1, 2, 3],
            ExpansionPreset::Case1 => vec![1],
            ExpansionPreset::Case2 => vec![2],
            ExpansionPreset::Case3 => vec![3],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            ExpansionPreset::Matrix => "matrix",
            ExpansionPreset::Case1 => "case1",
            ExpansionPreset::Case2 => "case2",
            ExpansionPreset::Case3 => "case3",
        }
    }
}

impl std::str::FromStr for ExpansionPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matrix" => Ok(ExpansionPreset::Matrix),
            "case1" => Ok(ExpansionPreset::Case1),
            "case2" => Ok(ExpansionPreset::Case2),
            "case3" => Ok(ExpansionPreset::Case3),
            other => Err(format!(
                "unknown expansion preset `{other}` (expected matrix, case1, case2, or case3)"
            )),
        }
    }
}

// Raw TOML layout; everything optional so validation can name what's wrong.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    paths: Option<RawPaths>,
    #[serde(default)]
    annotation: RawAnnotation,
    #[serde(default)]
    seeds: RawSeeds,
    #[serde(default)]
    preprocess: RawPreprocess,
    #[serde(default)]
    expansion: RawExpansion,
    #[serde(default)]
    classify: RawClassify,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    ontology: String,
    unigrams: String,
    bigrams: String,
    output_dir: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotation {
    #[serde(default)]
    seed_sheets: Vec<String>,
    seed_tiebreak: Option<String>,
    #[serde(default)]
    gold_sheets: Vec<String>,
    gold_tiebreak: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeeds {
    min_size: Option<usize>,
    random: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreprocess {
    stemmer_rules: Option<String>,
    tagger_lexicon: Option<String>,
    keep_pos: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpansion {
    preset: Option<String>,
    positive_terms: Option<Vec<String>>,
    negative_terms: Option<Vec<String>>,
    max_rounds: Option<usize>,
    neutral_propagates: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassify {
    folds: Option<usize>,
    score: Option<String>,
    knn_k: Option<Vec<usize>>,
    knn_metrics: Option<Vec<String>>,
    centroid_similarities: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    rng_seed: Option<u64>,
}

/// Fully resolved pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub ontology: PathBuf,
    pub unigrams: PathBuf,
    pub bigrams: PathBuf,
    pub output_dir: PathBuf,
    pub seed_sheets: Vec<PathBuf>,
    pub seed_tiebreak: Option<PathBuf>,
    pub gold_sheets: Vec<PathBuf>,
    pub gold_tiebreak: Option<PathBuf>,
    pub min_size: usize,
    pub random_seed_choice: bool,
    pub stemmer_rules: Option<PathBuf>,
    pub tagger_lexicon: Option<PathBuf>,
    pub keep_pos: BTreeSet<PartOfSpeech>,
    pub preset: ExpansionPreset,
    pub positive_terms: Vec<String>,
    pub negative_terms: Vec<String>,
    pub max_rounds: usize,
    pub neutral_propagates: bool,
    pub folds: usize,
    pub score: ScoreKind,
    pub knn_k: Vec<usize>,
    pub knn_metrics: Vec<crate::classify::Metric>,
    pub centroid_similarities: Vec<crate::classify::Similarity>,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigReport {
    pub resolved: Vec<(String, String)>,
    pub problems: Vec<String>,
}

impl ConfigReport {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }
}

impl PipelineConfig {
    /// Parse a TOML project file; relative paths resolve against the config
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig, PipelineError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: RawConfig = toml::from_str(&body)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_raw(raw, base)
    }

    fn from_raw(raw: RawConfig, base: &Path) -> Result<PipelineConfig, PipelineError> {
        let resolve = |p: &str| -> PathBuf {
            let candidate = PathBuf::from(p);
            if candidate.is_absolute() {
                candidate
            } else {
                base.join(candidate)
            }
        };

        let paths = raw
            .paths
            .ok_or_else(|| config_err("missing [paths] section"))?;

        let keep_pos = match raw.preprocess.keep_pos {
            None => Preprocessor::default_keep_pos(),
            Some(list) => {
                let mut set = BTreeSet::new();
                for entry in list {
                    let pos: PartOfSpeech = entry
                        .parse()
                        .map_err(|e: String| config_err(format!("preprocess.keep_pos: {e}")))?;
                    set.insert(pos);
                }
                set
            }
        };

        let preset = match raw.expansion.preset.as_deref() {
            None => ExpansionPreset::Matrix,
            Some(value) => value
                .parse()
                .map_err(|e: String| config_err(format!("expansion.preset: {e}")))?,
        };

        let score = match raw.classify.score.as_deref() {
            None => ScoreKind::MacroF,
            Some(value) => value
                .parse()
                .map_err(|e: String| config_err(format!("classify.score: {e}")))?,
        };

        let knn_metrics = match raw.classify.knn_metrics {
            None => vec![
                crate::classify::Metric::CosineDistance,
                crate::classify::Metric::Euclidean,
            ],
            Some(list) => list
                .iter()
                .map(|m| {
                    m.parse().map_err(|e: String| {
                        config_err(format!("classify.knn_metrics: {e}"))
                    })
                })
                .collect::<Result<_, _>>()?,
        };

        let centroid_similarities = match raw.classify.centroid_similarities {
            None => vec![
                crate::classify::Similarity::Cosine,
                crate::classify::Similarity::NegativeEuclidean,
            ],
            Some(list) => list
                .iter()
                .map(|s| {
                    s.parse().map_err(|e: String| {
                        config_err(format!("classify.centroid_similarities: {e}"))
                    })
                })
                .collect::<Result<_, _>>()?,
        };

        let folds = raw.classify.folds.unwrap_or(10);
        if folds < 2 {
            return Err(config_err("classify.folds must be at least 2"));
        }

        Ok(PipelineConfig {
            ontology: resolve(&paths.ontology),
            unigrams: resolve(&paths.unigrams),
            bigrams: resolve(&paths.bigrams),
            output_dir: resolve(&paths.output_dir),
            seed_sheets: raw.annotation.seed_sheets.iter().map(|p| resolve(p)).collect(),
            seed_tiebreak: raw.annotation.seed_tiebreak.as_deref().map(resolve),
            gold_sheets: raw.annotation.gold_sheets.iter().map(|p| resolve(p)).collect(),
            gold_tiebreak: raw.annotation.gold_tiebreak.as_deref().map(resolve),
            min_size: raw.seeds.min_size.unwrap_or(2),
            random_seed_choice: raw.seeds.random.unwrap_or(false),
            stemmer_rules: raw.preprocess.stemmer_rules.as_deref().map(resolve),
            tagger_lexicon: raw.preprocess.tagger_lexicon.as_deref().map(resolve),
            keep_pos,
            preset,
            positive_terms: raw
                .expansion
                .positive_terms
                .unwrap_or_else(|| vec!["good".into()]),
            negative_terms: raw
                .expansion
                .negative_terms
                .unwrap_or_else(|| vec!["bad".into()]),
            max_rounds: raw.expansion.max_rounds.unwrap_or(0),
            neutral_propagates: raw.expansion.neutral_propagates.unwrap_or(true),
            folds,
            score,
            knn_k: raw
                .classify
                .knn_k
                .unwrap_or_else(|| vec![1, 3, 5, 7, 9, 15, 21, 31]),
            knn_metrics,
            centroid_similarities,
            rng_seed: raw.run.rng_seed.unwrap_or(42),
        })
    }

    /// Resolved values plus any missing referenced paths.
    pub fn validate(&self) -> ConfigReport {
        let mut resolved = Vec::new();
        let mut problems = Vec::new();

        let mut required: Vec<(String, &Path)> = vec![
            ("paths.ontology".into(), self.ontology.as_path()),
            ("paths.unigrams".into(), self.unigrams.as_path()),
            ("paths.bigrams".into(), self.bigrams.as_path()),
        ];
        for (i, sheet) in self.seed_sheets.iter().enumerate() {
            required.push((format!("annotation.seed_sheets[{i}]"), sheet.as_path()));
        }
        if let Some(p) = &self.seed_tiebreak {
            required.push(("annotation.seed_tiebreak".into(), p.as_path()));
        }
        for (i, sheet) in self.gold_sheets.iter().enumerate() {
            required.push((format!("annotation.gold_sheets[{i}]"), sheet.as_path()));
        }
        if let Some(p) = &self.gold_tiebreak {
            required.push(("annotation.gold_tiebreak".into(), p.as_path()));
        }
        if let Some(p) = &self.stemmer_rules {
            required.push(("preprocess.stemmer_rules".into(), p.as_path()));
        }
        if let Some(p) = &self.tagger_lexicon {
            required.push(("preprocess.tagger_lexicon".into(), p.as_path()));
        }
        for (field, path) in required {
            resolved.push((field.clone(), path.display().to_string()));
            if !path.exists() {
                problems.push(format!("{field}: path does not exist: {}", path.display()));
            }
        }
        resolved.push((
            "paths.output_dir".into(),
            self.output_dir.display().to_string(),
        ));

        resolved.push(("seeds.min_size".into(), self.min_size.to_string()));
        resolved.push(("seeds.random".into(), self.random_seed_choice.to_string()));
        resolved.push(("expansion.preset".into(), self.preset.as_str().to_string()));
        resolved.push((
            "expansion.positive_terms".into(),
            self.positive_terms.join(","),
        ));
        resolved.push((
            "expansion.negative_terms".into(),
            self.negative_terms.join(","),
        ));
        resolved.push(("classify.folds".into(), self.folds.to_string()));
        resolved.push(("run.rng_seed".into(), self.rng_seed.to_string()));

        if self.min_size == 0 {
            problems.push("seeds.min_size must be at least 1".into());
        }
        if self.seed_sheets.len() == 1 {
            problems.push("annotation.seed_sheets needs at least 2 sheets (one per annotator)".into());
        }
        if self.gold_sheets.len() == 1 {
            problems.push("annotation.gold_sheets needs at least 2 sheets (one per annotator)".into());
        }
        if self.knn_k.is_empty() || self.knn_metrics.is_empty() {
            problems.push("classify: the KNN grid must not be empty".into());
        }
        if self.centroid_similarities.is_empty() {
            problems.push("classify: the centroid grid must not be empty".into());
        }

        ConfigReport { resolved, problems }
    }
}

/// Load + validate in one call (the `config validate` subcommand).
pub fn validate_config(path: impl AsRef<Path>) -> Result<ConfigReport, PipelineError> {
    Ok(PipelineConfig::load(path)?.validate())
}

/// Terminal state of a pipeline run.
#[derive(Debug)]
pub enum PipelineOutcome {
    Completed(Box<RunSummary>),
    /// The run paused because annotator input is needed.
    AwaitingAnnotation {
        sheet: PathBuf,
        message: String,
    },
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub dataset_paths: Vec<PathBuf>,
    pub report_paths: Vec<PathBuf>,
    pub aggregate_paths: Vec<PathBuf>,
    pub lexicon_path: PathBuf,
    pub selected: RunInfo,
    pub selected_params: ParamSet,
    pub stages_run: Vec<String>,
    pub stages_skipped: Vec<String>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct Manifest {
    stage: String,
    inputs: BTreeMap<String, String>,
    params_hash: String,
    rng_seed: u64,
    outputs: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let mut file = fs::File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buffer).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buffer[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn sha256_str(value: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(value.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct StageRunner {
    manifest_dir: PathBuf,
    rng_seed: u64,
    ran: Vec<String>,
    skipped: Vec<String>,
}

impl StageRunner {
    fn new(out_dir: &Path, rng_seed: u64) -> Result<StageRunner, PipelineError> {
        let manifest_dir = out_dir.join("manifests");
        fs::create_dir_all(&manifest_dir).map_err(|source| PipelineError::Io {
            path: manifest_dir.clone(),
            source,
        })?;
        Ok(StageRunner {
            manifest_dir,
            rng_seed,
            ran: Vec::new(),
            skipped: Vec::new(),
        })
    }

    /// Run `work` unless the stage manifest shows inputs, params, and
    /// outputs all unchanged.
    fn stage(
        &mut self,
        name: &str,
        inputs: &[&Path],
        params: &str,
        outputs: &[PathBuf],
        work: impl FnOnce() -> Result<(), PipelineError>,
    ) -> Result<(), PipelineError> {
        let mut input_hashes = BTreeMap::new();
        for input in inputs {
            if !input.exists() {
                return Err(PipelineError::Stage {
                    stage: name.to_string(),
                    message: format!("missing input {}", input.display()),
                });
            }
            input_hashes.insert(input.display().to_string(), sha256_file(input)?);
        }
        let params_hash = sha256_str(params);
        let manifest_path = self.manifest_dir.join(format!("{name}.json"));

        if let Ok(body) = fs::read_to_string(&manifest_path) {
            if let Ok(existing) = serde_json::from_str::<Manifest>(&body) {
                let up_to_date = existing.inputs == input_hashes
                    && existing.params_hash == params_hash
                    && existing.rng_seed == self.rng_seed
                    && outputs.iter().all(|o| o.exists())
                    && outputs.iter().all(|o| {
                        sha256_file(o)
                            .map(|h| existing.outputs.get(&o.display().to_string()) == Some(&h))
                            .unwrap_or(false)
                    });
                if up_to_date {
                    logging::info(format!("stage {name}: up to date, skipped"));
                    self.skipped.push(name.to_string());
                    return Ok(());
                }
            }
        }

        logging::info(format!("stage {name}: running"));
        work()?;

        let mut output_hashes = BTreeMap::new();
        for output in outputs {
            output_hashes.insert(output.display().to_string(), sha256_file(output)?);
        }
        let manifest = Manifest {
            stage: name.to_string(),
            inputs: input_hashes,
            params_hash,
            rng_seed: self.rng_seed,
            outputs: output_hashes,
        };
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&manifest_path, body).map_err(|source| PipelineError::Io {
            path: manifest_path.clone(),
            source,
        })?;
        self.ran.push(name.to_string());
        Ok(())
    }
}

fn stage_err(stage: &str, error: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage: stage.to_string(),
        message: error.to_string(),
    }
}

fn write_text(path: &Path, body: &str) -> Result<(), PipelineError> {
    fs::write(path, body).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_lines_file(path: &Path) -> Result<Vec<String>, PipelineError> {
    let body = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

#[derive(Serialize)]
struct AgreementReport {
    annotators: usize,
    items: usize,
    kappa: f64,
    kappa_percent: f64,
    disagreements: Vec<String>,
}

fn build_preprocessor(config: &PipelineConfig) -> Result<Preprocessor, PipelineError> {
    let stemmer: Box<dyn Stemmer + Send + Sync> = match &config.stemmer_rules {
        Some(path) => Box::new(
            SuffixRuleStemmer::from_file(path).map_err(|e| stage_err("docs", e))?,
        ),
        None => Box::new(IdentityStemmer),
    };
    let tagger: Box<dyn PosTagger + Send + Sync> = match &config.tagger_lexicon {
        Some(path) => {
            Box::new(LexiconTagger::from_file(path).map_err(|e| stage_err("docs", e))?)
        }
        None => Box::new(NullTagger),
    };
    Ok(Preprocessor::new(stemmer, tagger, config.keep_pos.clone()))
}

fn dataset_file_names(preset: ExpansionPreset) -> Vec<(String, u8, Algorithm)> {
    let mut names = Vec::new();
    for case in preset.cases() {
        for (offset, algorithm) in [(1u8, Algorithm::Default), (2u8, Algorithm::Pmi)] {
            let number = (case - 1) * 2 + offset;
            names.push((format!("Data-{number}"), case, algorithm));
        }
    }
    names
}

/// Execute the full pipeline. Stages whose artifacts are up to date are
/// skipped; a failed stage aborts and leaves earlier artifacts intact.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let report = config.validate();
    if !report.is_valid() {
        return Err(config_err(report.problems.join("; ")));
    }

    let out = config.output_dir.clone();
    for dir in [
        out.clone(),
        out.join("datasets"),
        out.join("models"),
        out.join("reports"),
        out.join("aggregates"),
    ] {
        fs::create_dir_all(&dir).map_err(|source| PipelineError::Io { path: dir, source })?;
    }
    let mut runner = StageRunner::new(&out, config.rng_seed)?;

    let graph_path = out.join("graph.json");
    let partition_path = out.join("partition.json");
    let seeds_path = out.join("seeds.txt");
    let seed_sheet_path = out.join("seed_sheet.tsv");
    let seed_labels_path = out.join("seed_labels.tsv");
    let seed_agreement_path = out.join("seed_agreement.json");
    let docs_path = out.join("docs.jsonl");
    let gold_path = out.join("gold.tsv");
    let gold_agreement_path = out.join("gold_agreement.json");
    let gold_sheet_path = out.join("gold_sheet.tsv");
    let lexicon_path = out.join("lexicon.tsv");
    let lexicon_stats_path = out.join("lexicon_stats.json");

    // 1. Relation graph over antonym edges, symmetrized.
    runner.stage(
        "graph",
        &[&config.ontology],
        "relations=antonym symmetrize=true",
        std::slice::from_ref(&graph_path),
        || {
            let ontology = Ontology::load(&config.ontology, LoadMode::Strict)
                .map_err(|e| stage_err("graph", e))?;
            let kinds: BTreeSet<RelationKind> =
                [RelationKind::Antonym].into_iter().collect();
            let graph = PolarityGraph::build(&ontology, &kinds, true);
            graph.save(&graph_path).map_err(|e| stage_err("graph", e))
        },
    )?;

    // 2. Strongly connected components.
    runner.stage(
        "scc",
        &[&graph_path],
        "algorithm=kosaraju",
        std::slice::from_ref(&partition_path),
        || {
            let graph = PolarityGraph::load(&graph_path).map_err(|e| stage_err("scc", e))?;
            graph
                .kosaraju()
                .save(&partition_path)
                .map_err(|e| stage_err("scc", e))
        },
    )?;

    // 3. Seed selection.
    runner.stage(
        "seeds",
        &[&partition_path],
        &format!(
            "min_size={} random={}",
            config.min_size, config.random_seed_choice
        ),
        std::slice::from_ref(&seeds_path),
        || {
            let partition =
                SccPartition::load(&partition_path).map_err(|e| stage_err("seeds", e))?;
            let seeds = if config.random_seed_choice {
                partition.select_seeds_random(config.min_size, config.rng_seed)
            } else {
                partition.select_seeds(config.min_size)
            };
            let mut body = seeds.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            write_text(&seeds_path, &body)
        },
    )?;

    // 4. Blank annotation sheet for the seed list.
    runner.stage(
        "seed_sheet",
        &[&config.ontology, &seeds_path],
        "",
        std::slice::from_ref(&seed_sheet_path),
        || {
            let ontology = Ontology::load(&config.ontology, LoadMode::Strict)
                .map_err(|e| stage_err("seed_sheet", e))?;
            let seeds = read_lines_file(&seeds_path)?;
            annotation::export_sheet(&seeds, &ontology, &seed_sheet_path)
                .map_err(|e| stage_err("seed_sheet", e))?;
            Ok(())
        },
    )?;

    if config.seed_sheets.is_empty() {
        return Ok(PipelineOutcome::AwaitingAnnotation {
            sheet: seed_sheet_path.clone(),
            message: format!(
                "seed annotation needed: copy {} once per annotator, fill in the \
                 label column (positive|neutral|negative), then set \
                 [annotation] seed_sheets in the project config and rerun",
                seed_sheet_path.display()
            ),
        });
    }

    // 5. Import seed annotations, measure agreement, adjudicate.
    {
        let mut inputs: Vec<&Path> = vec![seeds_path.as_path()];
        inputs.extend(config.seed_sheets.iter().map(|p| p.as_path()));
        if let Some(t) = &config.seed_tiebreak {
            inputs.push(t.as_path());
        }
        runner.stage(
            "seed_gold",
            &inputs,
            "",
            &[seed_labels_path.clone(), seed_agreement_path.clone()],
            || {
                let set = annotation::import_annotations(&config.seed_sheets)
                    .map_err(|e| stage_err("seed_gold", e))?;
                let seeds: BTreeSet<String> =
                    read_lines_file(&seeds_path)?.into_iter().collect();
                let universe: BTreeSet<String> =
                    set.universe().iter().cloned().collect();
                if seeds != universe {
                    return Err(stage_err(
                        "seed_gold",
                        "annotation sheets do not cover the selected seed list; \
                         re-export the seed sheet and re-annotate",
                    ));
                }
                let kappa = set.fleiss_kappa().map_err(|e| stage_err("seed_gold", e))?;
                let agreement = AgreementReport {
                    annotators: set.annotator_count(),
                    items: set.item_count(),
                    kappa,
                    kappa_percent: 100.0 * kappa,
                    disagreements: set.disagreements(),
                };
                write_text(
                    &seed_agreement_path,
                    &serde_json::to_string_pretty(&agreement).expect("serializes"),
                )?;
                logging::info(format!(
                    "seed annotation agreement: kappa = {kappa:.4} ({:.1}%)",
                    100.0 * kappa
                ));
                let tiebreak = match &config.seed_tiebreak {
                    Some(path) => annotation::load_tiebreak_sheet(path)
                        .map_err(|e| stage_err("seed_gold", e))?,
                    None => BTreeMap::new(),
                };
                let adjudication = set
                    .adjudicate(&tiebreak)
                    .map_err(|e| stage_err("seed_gold", e))?;
                for warning in &adjudication.warnings {
                    logging::warn(format!("seed_gold: {warning}"));
                }
                adjudication
                    .gold
                    .save(&seed_labels_path)
                    .map_err(|e| stage_err("seed_gold", e))
            },
        )?;
    }

    // 6. Training datasets via bootstrapped expansion.
    let dataset_names = dataset_file_names(config.preset);
    let dataset_paths: Vec<PathBuf> = dataset_names
        .iter()
        .map(|(name, _, _)| out.join("datasets").join(format!("{name}.tsv")))
        .collect();
    runner.stage(
        "datasets",
        &[
            &config.ontology,
            &seed_labels_path,
            &config.unigrams,
            &config.bigrams,
        ],
        &format!(
            "preset={} positive={} negative={} max_rounds={} neutral_propagates={}",
            config.preset.as_str(),
            config.positive_terms.join(","),
            config.negative_terms.join(","),
            config.max_rounds,
            config.neutral_propagates
        ),
        &dataset_paths,
        || {
            let ontology = Ontology::load(&config.ontology, LoadMode::Strict)
                .map_err(|e| stage_err("datasets", e))?;
            let seed = LabeledSeed::load_hand_seed(&seed_labels_path)
                .map_err(|e| stage_err("datasets", e))?;
            let counts = NGramCounts::load(&config.unigrams, &config.bigrams)
                .map_err(|e| stage_err("datasets", e))?;
            let mut base = ExpansionConfig::case1(Algorithm::Default);
            base.pmi_positive_seeds = config.positive_terms.clone();
            base.pmi_negative_seeds = config.negative_terms.clone();
            base.max_rounds = config.max_rounds;
            base.neutral_propagates = config.neutral_propagates;
            let all = generate_training_matrix(&ontology, &seed, &counts, &base)
                .map_err(|e| stage_err("datasets", e))?;
            let wanted: BTreeMap<&str, &PathBuf> = dataset_names
                .iter()
                .zip(&dataset_paths)
                .map(|((name, _, _), path)| (name.as_str(), path))
                .collect();
            for dataset in &all {
                if let Some(path) = wanted.get(dataset.meta.name.as_str()) {
                    dataset
                        .entries
                        .save(path, Some(&dataset.meta))
                        .map_err(|e| stage_err("datasets", e))?;
                }
            }
            Ok(())
        },
    )?;

    // 7. Gloss documents for every synset.
    {
        let mut inputs: Vec<&Path> = vec![config.ontology.as_path()];
        if let Some(p) = &config.stemmer_rules {
            inputs.push(p.as_path());
        }
        if let Some(p) = &config.tagger_lexicon {
            inputs.push(p.as_path());
        }
        let keep: Vec<&str> = config.keep_pos.iter().map(|p| p.as_str()).collect();
        runner.stage(
            "docs",
            &inputs,
            &format!("keep_pos={}", keep.join(",")),
            std::slice::from_ref(&docs_path),
            || {
                let ontology = Ontology::load(&config.ontology, LoadMode::Strict)
                    .map_err(|e| stage_err("docs", e))?;
                let preprocessor = build_preprocessor(config)?;
                let documents = preprocessor
                    .documents(&ontology)
                    .map_err(|e| stage_err("docs", e))?;
                save_documents(&documents, &docs_path).map_err(|e| stage_err("docs", e))
            },
        )?;
    }

    // 8. Gold standard for evaluation.
    if config.gold_sheets.is_empty() {
        let ontology = Ontology::load(&config.ontology, LoadMode::Strict)
            .map_err(|e| stage_err("gold", e))?;
        let seed_ids: BTreeSet<String> = GoldStandard::load(&seed_labels_path)
            .map_err(|e| stage_err("gold", e))?
            .iter()
            .map(|(id, _)| id.to_string())
            .collect();
        let candidates: Vec<String> = ontology
            .ids()
            .filter(|id| !seed_ids.contains(*id))
            .map(str::to_string)
            .collect();
        annotation::export_sheet(&candidates, &ontology, &gold_sheet_path)
            .map_err(|e| stage_err("gold", e))?;
        return Ok(PipelineOutcome::AwaitingAnnotation {
            sheet: gold_sheet_path.clone(),
            message: format!(
                "gold-standard annotation needed: copy {} once per annotator \
                 (keep or trim rows, same rows in every copy), fill in the label \
                 column, then set [annotation] gold_sheets in the project config \
                 and rerun",
                gold_sheet_path.display()
            ),
        });
    }
    {
        let mut inputs: Vec<&Path> = Vec::new();
        inputs.extend(config.gold_sheets.iter().map(|p| p.as_path()));
        if let Some(t) = &config.gold_tiebreak {
            inputs.push(t.as_path());
        }
        runner.stage(
            "gold",
            &inputs,
            "",
            &[gold_path.clone(), gold_agreement_path.clone()],
            || {
                let set = annotation::import_annotations(&config.gold_sheets)
                    .map_err(|e| stage_err("gold", e))?;
                let kappa = set.fleiss_kappa().map_err(|e| stage_err("gold", e))?;
                let agreement = AgreementReport {
                    annotators: set.annotator_count(),
                    items: set.item_count(),
                    kappa,
                    kappa_percent: 100.0 * kappa,
                    disagreements: set.disagreements(),
                };
                write_text(
                    &gold_agreement_path,
                    &serde_json::to_string_pretty(&agreement).expect("serializes"),
                )?;
                logging::info(format!(
                    "gold annotation agreement: kappa = {kappa:.4} ({:.1}%)",
                    100.0 * kappa
                ));
                let tiebreak = match &config.gold_tiebreak {
                    Some(path) => annotation::load_tiebreak_sheet(path)
                        .map_err(|e| stage_err("gold", e))?,
                    None => BTreeMap::new(),
                };
                let adjudication =
                    set.adjudicate(&tiebreak).map_err(|e| stage_err("gold", e))?;
                for warning in &adjudication.warnings {
                    logging::warn(format!("gold: {warning}"));
                }
                adjudication
                    .gold
                    .save(&gold_path)
                    .map_err(|e| stage_err("gold", e))
            },
        )?;
    }

    // 9. Tune, train, and evaluate every dataset x classifier cell.
    let mut report_paths = Vec::new();
    let mut model_paths = Vec::new();
    for ((name, _, _), _) in dataset_names.iter().zip(&dataset_paths) {
        for classifier in [ClassifierKind::Knn, ClassifierKind::Centroid] {
            report_paths.push(out.join("reports").join(format!("{name}_{classifier}.json")));
            model_paths.push(out.join("models").join(format!("{name}_{classifier}.json")));
        }
    }
    let matrix_path = out.join("reports").join("matrix.tsv");
    let aggregate_paths = vec![
        out.join("aggregates").join("aggregate_by_algorithm.json"),
        out.join("aggregates").join("aggregate_by_case.json"),
        out.join("aggregates").join("aggregate_by_classifier.json"),
    ];
    {
        let mut inputs: Vec<&Path> = vec![docs_path.as_path(), gold_path.as_path()];
        inputs.extend(dataset_paths.iter().map(|p| p.as_path()));
        let mut outputs = report_paths.clone();
        outputs.extend(model_paths.clone());
        outputs.push(matrix_path.clone());
        outputs.extend(aggregate_paths.clone());
        runner.stage(
            "train_eval",
            &inputs,
            &format!(
                "folds={} score={:?} knn_k={:?} knn_metrics={:?} similarities={:?}",
                config.folds,
                config.score,
                config.knn_k,
                config.knn_metrics,
                config.centroid_similarities
            ),
            &outputs,
            || {
                let documents =
                    load_documents(&docs_path).map_err(|e| stage_err("train_eval", e))?;
                let docs_by_id: BTreeMap<&str, &GlossDocument> =
                    documents.iter().map(|d| (d.id.as_str(), d)).collect();
                let vocabulary = Vocabulary::build(&documents);
                let gold =
                    GoldStandard::load(&gold_path).map_err(|e| stage_err("train_eval", e))?;

                let knn_grid: Vec<ParamSet> = config
                    .knn_k
                    .iter()
                    .flat_map(|&k| {
                        config
                            .knn_metrics
                            .iter()
                            .map(move |&metric| ParamSet::Knn { k, metric })
                    })
                    .collect();
                let centroid_grid: Vec<ParamSet> = config
                    .centroid_similarities
                    .iter()
                    .map(|&similarity| ParamSet::Centroid { similarity })
                    .collect();

                let mut matrix = RunMatrix::default();
                for ((name, case, algorithm), path) in
                    dataset_names.iter().zip(&dataset_paths)
                {
                    let (entries, _) =
                        LabeledSeed::load(path).map_err(|e| stage_err("train_eval", e))?;
                    let data: Vec<(FeatureVector, Label)> = entries
                        .iter()
                        .map(|(id, entry)| {
                            let doc = docs_by_id.get(id).ok_or_else(|| {
                                stage_err(
                                    "train_eval",
                                    format!("dataset {name} references unknown synset `{id}`"),
                                )
                            })?;
                            Ok((vectorize(doc, &vocabulary), entry.label))
                        })
                        .collect::<Result<_, PipelineError>>()?;

                    for (classifier, grid) in [
                        (ClassifierKind::Knn, &knn_grid),
                        (ClassifierKind::Centroid, &centroid_grid),
                    ] {
                        let tuning =
                            cross_validate(&data, grid, config.folds, config.score)
                                .map_err(|e| {
                                    stage_err(
                                        "train_eval",
                                        format!("{name}/{classifier}: {e}"),
                                    )
                                })?;
                        for warning in &tuning.warnings {
                            logging::debug(format!("{name}/{classifier}: {warning}"));
                        }
                        let model = TrainedModel::train(
                            vocabulary.clone(),
                            &data,
                            tuning.best,
                            name.clone(),
                        )
                        .map_err(|e| stage_err("train_eval", e))?;
                        model
                            .save(out.join("models").join(format!("{name}_{classifier}.json")))
                            .map_err(|e| stage_err("train_eval", e))?;

                        let mut predictions: BTreeMap<String, Label> = BTreeMap::new();
                        for (id, _) in gold.iter() {
                            let doc = docs_by_id.get(id).ok_or_else(|| {
                                stage_err(
                                    "train_eval",
                                    format!("gold id `{id}` has no document; it is not part of the ontology"),
                                )
                            })?;
                            predictions.insert(id.to_string(), model.predict_document(doc));
                        }
                        let report = evaluate(&predictions, &gold)
                            .map_err(|e| stage_err("train_eval", e))?;
                        logging::info(format!(
                            "{name}/{classifier}: tuned {} -> accuracy {:.5}, macro-F {:.5}",
                            tuning.best, report.accuracy, report.macro_f
                        ));
                        let run_report = RunReport {
                            run: RunInfo {
                                dataset: name.clone(),
                                case: *case,
                                algorithm: *algorithm,
                                classifier,
                            },
                            report,
                        };
                        run_report
                            .save(
                                out.join("reports")
                                    .join(format!("{name}_{classifier}.json")),
                            )
                            .map_err(|e| stage_err("train_eval", e))?;
                        matrix.push(run_report);
                    }
                }

                write_text(&matrix_path, &matrix.summary_table())?;
                for (grouping, path) in [
                    (Grouping::ExpansionAlgorithm, &aggregate_paths[0]),
                    (Grouping::ExpansionCase, &aggregate_paths[1]),
                    (Grouping::Classifier, &aggregate_paths[2]),
                ] {
                    let groups =
                        aggregate_by(&matrix, grouping).map_err(|e| stage_err("train_eval", e))?;
                    write_text(
                        path,
                        &serde_json::to_string_pretty(&groups).expect("serializes"),
                    )?;
                }
                Ok(())
            },
        )?;
    }

    // 10. Final lexicon from the best run, with the gold data folded into
    // the training set.
    {
        let mut inputs: Vec<&Path> = vec![
            config.ontology.as_path(),
            docs_path.as_path(),
            gold_path.as_path(),
        ];
        inputs.extend(dataset_paths.iter().map(|p| p.as_path()));
        inputs.extend(report_paths.iter().map(|p| p.as_path()));
        runner.stage(
            "lexicon",
            &inputs,
            "",
            &[lexicon_path.clone(), lexicon_stats_path.clone()],
            || {
                let ontology = Ontology::load(&config.ontology, LoadMode::Strict)
                    .map_err(|e| stage_err("lexicon", e))?;
                let documents =
                    load_documents(&docs_path).map_err(|e| stage_err("lexicon", e))?;
                let docs_by_id: BTreeMap<&str, &GlossDocument> =
                    documents.iter().map(|d| (d.id.as_str(), d)).collect();
                let gold =
                    GoldStandard::load(&gold_path).map_err(|e| stage_err("lexicon", e))?;
                let (selected, params) =
                    select_best_run(&out, &report_paths).map_err(|e| stage_err("lexicon", e))?;
                logging::info(format!(
                    "lexicon: selected {} / {} ({params})",
                    selected.dataset, selected.classifier
                ));

                let dataset_path = out
                    .join("datasets")
                    .join(format!("{}.tsv", selected.dataset));
                let (training, _) =
                    LabeledSeed::load(&dataset_path).map_err(|e| stage_err("lexicon", e))?;

                // Concatenate gold into the training data; gold wins on
                // overlap.
                let mut final_labels: BTreeMap<String, Label> = training.labels();
                for (id, entry) in gold.iter() {
                    final_labels.insert(id.to_string(), entry.label);
                }
                let vocabulary = Vocabulary::build(&documents);
                let data: Vec<(FeatureVector, Label)> = final_labels
                    .iter()
                    .map(|(id, label)| {
                        let doc = docs_by_id.get(id.as_str()).ok_or_else(|| {
                            stage_err("lexicon", format!("no document for `{id}`"))
                        })?;
                        Ok((vectorize(doc, &vocabulary), *label))
                    })
                    .collect::<Result<_, PipelineError>>()?;
                let model =
                    TrainedModel::train(vocabulary, &data, params, selected.dataset.clone())
                        .map_err(|e| stage_err("lexicon", e))?;

                let mut lexicon =
                    build_lexicon(&ontology, &training, &gold, &model, &documents)
                        .map_err(|e| stage_err("lexicon", e))?;
                lexicon.metadata = Some(BuildMetadata {
                    model: params.to_string(),
                    dataset: selected.dataset.clone(),
                    timestamp: format!(
                        "unix:{}",
                        std::time::SystemTime::now()
                            .duration_since(std::time::UNIX_EPOCH)
                            .map(|d| d.as_secs())
                            .unwrap_or(0)
                    ),
                });
                lexicon
                    .export(&lexicon_path, LexiconFormat::Tsv)
                    .map_err(|e| stage_err("lexicon", e))?;
                lexicon
                    .save_metadata(&lexicon_path)
                    .map_err(|e| stage_err("lexicon", e))?;
                let stats = lexicon.stats();
                write_text(
                    &lexicon_stats_path,
                    &serde_json::to_string_pretty(&stats).expect("serializes"),
                )?;
                logging::info(format!(
                    "lexicon: {} synsets ({} entries by label)",
                    stats.total,
                    stats
                        .by_label
                        .iter()
                        .map(|(l, c)| format!("{l}={c}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                ));
                Ok(())
            },
        )?;
    }

    let (selected, selected_params) =
        select_best_run(&out, &report_paths).map_err(|e| stage_err("lexicon", e))?;
    Ok(PipelineOutcome::Completed(Box::new(RunSummary {
        out_dir: out,
        dataset_paths,
        report_paths,
        aggregate_paths,
        lexicon_path,
        selected,
        selected_params,
        stages_run: runner.ran,
        stages_skipped: runner.skipped,
    })))
}

/// Best run = highest macro-F; ties resolve to the first (dataset,
/// classifier) pair by dataset name, then classifier order (knn before
/// centroid). The tuned parameters are read back from the stored model
/// file.
fn select_best_run(
    out: &Path,
    report_paths: &[PathBuf],
) -> Result<(RunInfo, ParamSet), Box<dyn std::error::Error>> {
    let mut best: Option<(RunInfo, f64)> = None;
    for path in report_paths {
        let report = RunReport::load(path)?;
        let candidate = (report.run.clone(), report.report.macro_f);
        best = Some(match best {
            None => candidate,
            Some(current) => {
                let better = candidate.1 > current.1
                    || (candidate.1 == current.1
                        && (
                            candidate.0.dataset.as_str(),
                            candidate.0.classifier,
                        ) < (current.0.dataset.as_str(), current.0.classifier));
                if better {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    let (run, _) = best.ok_or("no run reports found")?;
    let model_path = out
        .join("models")
        .join(format!("{}_{}.json", run.dataset, run.classifier));
    let model = TrainedModel::load(&model_path)?;
    Ok((run, model.params))
}
