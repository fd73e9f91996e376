//! The `lexforge` command-line interface.
//!
//! Every subcommand is a thin wrapper over a library call; the CLI only
//! parses arguments, wires files together, and prints results.
//! Exit codes for `lexforge run`: 0 success, 2 config error, 3 stage
//! failure, 4 awaiting annotation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::annotation;
use crate::classify::{
    cross_validate, default_centroid_grid, default_knn_grid, Metric, ParamSet, ScoreKind,
    Similarity, TrainedModel,
};
use crate::counts::NGramCounts;
use crate::docpipe::{
    load_documents, save_documents, save_vectors, vectorize, IdentityStemmer, LexiconTagger,
    NullTagger, PosTagger, Preprocessor, Stemmer, SuffixRuleStemmer, Vocabulary,
};
use crate::evaluate::{aggregate_by, evaluate, ClassifierKind, Grouping, RunMatrix};
use crate::expansion::{
    expand, generate_training_matrix, Algorithm, DatasetMeta, ExpansionConfig, LabeledSeed,
};
use crate::label::Label;
use crate::lexicon::{build_lexicon, LexiconFormat, SentimentLexicon};
use crate::ontology::{LoadMode, Ontology, PartOfSpeech, RelationKind};
use crate::pipeline::{
    run_pipeline, validate_config, PipelineConfig, PipelineError, PipelineOutcome,
};
use crate::seedgraph::{PolarityGraph, SccPartition};

#[derive(Parser)]
#[command(
    name = "lexforge",
    version,
    about = "Induce a three-way sentiment lexicon over a wordnet-style ontology"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ontology file operations.
    Ontology {
        #[command(subcommand)]
        command: OntologyCmd,
    },
    /// Relation graph construction and SCC extraction.
    Graph {
        #[command(subcommand)]
        command: GraphCmd,
    },
    /// Seed list selection and coverage checking.
    Seeds {
        #[command(subcommand)]
        command: SeedsCmd,
    },
    /// Annotation sheets, agreement, and adjudication.
    Annotate {
        #[command(subcommand)]
        command: AnnotateCmd,
    },
    /// Bootstrapped seed expansion.
    #[command(args_conflicts_with_subcommands = true)]
    Expand(ExpandArgs),
    /// Gloss document generation and vectorization.
    Docs {
        #[command(subcommand)]
        command: DocsCmd,
    },
    /// Tune and train a classifier on a labeled dataset.
    Train(TrainArgs),
    /// Label documents with a trained model.
    Predict(PredictArgs),
    /// Score predictions against a gold standard.
    #[command(args_conflicts_with_subcommands = true)]
    Eval(EvalArgs),
    /// Final lexicon assembly and statistics.
    Lexicon {
        #[command(subcommand)]
        command: LexiconCmd,
    },
    /// Project config inspection.
    Config {
        #[command(subcommand)]
        command: ConfigCmd,
    },
    /// Run the whole pipeline from a project config.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum OntologyCmd {
    /// Load an ontology and report problems.
    Validate {
        path: PathBuf,
        /// Drop bad relations with warnings instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Synset counts per part of speech and relation counts per kind.
    Stats { path: PathBuf },
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Build the relation graph from an ontology.
    Build {
        ontology: PathBuf,
        /// Relation kinds to keep as edges.
        #[arg(long, value_delimiter = ',', default_value = "antonym")]
        relations: Vec<RelationKind>,
        /// Keep only the stored edge direction.
        #[arg(long)]
        no_symmetrize: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Extract strongly connected components (Kosaraju).
    Scc {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum SeedsCmd {
    /// Pick one seed per sufficiently large component.
    Select {
        partition: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        /// Pick a uniformly random member instead of the smallest id.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 42)]
        rng_seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Verify that the seeds reach every qualifying component.
    Check {
        graph: PathBuf,
        seeds: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
    },
}

#[derive(Subcommand)]
enum AnnotateCmd {
    /// Write a blank annotation sheet for a seed list.
    Export {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fleiss' kappa over two or more filled sheets.
    Kappa {
        #[arg(required = true, num_args = 2..)]
        sheets: Vec<PathBuf>,
    },
    /// Merge filled sheets into a gold standard.
    Merge {
        #[arg(required = true, num_args = 2..)]
        sheets: Vec<PathBuf>,
        /// Sheet holding labels for the disagreed items.
        #[arg(long)]
        tiebreak: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ExpandArgs {
    #[command(subcommand)]
    command: Option<ExpandSub>,
    #[arg(long)]
    ontology: Option<PathBuf>,
    /// Hand-labeled seed TSV (any file with id and label columns).
    #[arg(long)]
    seed: Option<PathBuf>,
    /// Expansion case: 1 = all POS/antonym, 2 = adjectives/all relations,
    /// 3 = adjectives/antonym.
    #[arg(long)]
    case: Option<u8>,
    #[arg(long, default_value = "default")]
    algorithm: Algorithm,
    #[arg(long)]
    counts_uni: Option<PathBuf>,
    #[arg(long)]
    counts_bi: Option<PathBuf>,
    /// 0 runs to fixed point.
    #[arg(long, default_value_t = 0)]
    max_rounds: usize,
    #[arg(long, value_delimiter = ',', default_value = "good")]
    positive_terms: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "bad")]
    negative_terms: Vec<String>,
    /// Restrict propagation to signed (non-neutral) labels.
    #[arg(long)]
    signed_only: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExpandSub {
    /// Generate all six training datasets (cases 1-3 x default/pmi).
    Matrix {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        seed: PathBuf,
        #[arg(long)]
        counts_uni: PathBuf,
        #[arg(long)]
        counts_bi: PathBuf,
        #[arg(long, default_value_t = 0)]
        max_rounds: usize,
        #[arg(long, value_delimiter = ',', default_value = "good")]
        positive_terms: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "bad")]
        negative_terms: Vec<String>,
        #[arg(long)]
        signed_only: bool,
        /// Output directory for Data-1.tsv .. Data-6.tsv.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum DocsCmd {
    /// Convert every synset to a preprocessed gloss document.
    Build {
        #[arg(long)]
        ontology: PathBuf,
        /// Suffix-strip rule table (TSV suffix<TAB>replacement).
        #[arg(long)]
        stemmer: Option<PathBuf>,
        /// Tag lexicon (TSV token<TAB>tag).
        #[arg(long)]
        tagger: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "noun,adjective")]
        keep_pos: Vec<PartOfSpeech>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// TF-IDF vectors for a document file, cached as sparse lines.
    Vectorize {
        #[arg(long)]
        docs: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled dataset TSV (id, label, round, source).
    #[arg(long)]
    data: PathBuf,
    /// Document file covering the whole corpus; the vocabulary is built
    /// from all of it.
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    model: ClassifierKind,
    /// Grid spec, e.g. `k=1,3,5;metric=cosine-distance,euclidean` or
    /// `similarity=cosine,negative-euclidean`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value = "macro-f")]
    score: ScoreKind,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    docs: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(subcommand)]
    command: Option<EvalSub>,
    /// Predictions TSV (id, label).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Gold standard TSV (id, label, provenance).
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalSub {
    /// Aggregate a directory of run reports.
    Matrix {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        group_by: Grouping,
    },
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum LexiconCmd {
    /// Classify every unlabeled synset and emit the final lexicon.
    Build {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Training dataset used for provenance (hand-seed/expansion).
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Precomputed documents; built on the fly when omitted.
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        stemmer: Option<PathBuf>,
        #[arg(long)]
        tagger: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "noun,adjective")]
        keep_pos: Vec<PartOfSpeech>,
        #[arg(long, default_value = "tsv")]
        format: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Label and source counts of an exported lexicon.
    Stats { path: PathBuf },
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Resolve and check a project config.
    Validate { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

impl clap::builder::ValueParserFactory for RelationKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<RelationKind>())
    }
}

impl clap::builder::ValueParserFactory for PartOfSpeech {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<PartOfSpeech>())
    }
}

impl clap::builder::ValueParserFactory for Algorithm {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Algorithm>())
    }
}

impl clap::builder::ValueParserFactory for ScoreKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<ScoreKind>())
    }
}

impl clap::builder::ValueParserFactory for ClassifierKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<ClassifierKind>())
    }
}

impl clap::builder::ValueParserFactory for Grouping {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Grouping>())
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn load_mode(lenient: bool) -> LoadMode {
    if lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    }
}

fn read_seed_list(path: &PathBuf) -> Result<Vec<String>, String> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| format!("failed to read {}: {e}", path.display()))?;
    Ok(body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn parse_grid(kind: ClassifierKind, spec: Option<&str>) -> Result<Vec<ParamSet>, String> {
    let Some(spec) = spec else {
        return Ok(match kind {
            ClassifierKind::Knn => default_knn_grid(),
            ClassifierKind::Centroid => default_centroid_grid(),
        });
    };
    let mut ks: Vec<usize> = Vec::new();
    let mut metrics: Vec<Metric> = Vec::new();
    let mut similarities: Vec<Similarity> = Vec::new();
    for part in spec.split(';') {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| format!("grid part `{part}` is not key=values"))?;
        match key.trim() {
            "k" => {
                for v in values.split(',') {
                    ks.push(
                        v.trim()
                            .parse()
                            .map_err(|_| format!("bad k value `{v}` in grid"))?,
                    );
                }
            }
            "metric" => {
                for v in values.split(',') {
                    metrics.push(v.trim().parse()?);
                }
            }
            "similarity" => {
                for v in values.split(',') {
                    similarities.push(v.trim().parse()?);
                }
            }
            other => return Err(format!("unknown grid key `{other}`")),
        }
    }
    match kind {
        ClassifierKind::Knn => {
            if ks.is_empty() {
                ks = vec![1, 3, 5, 7, 9, 15, 21, 31];
            }
            if metrics.is_empty() {
                metrics = vec![Metric::CosineDistance, Metric::Euclidean];
            }
            Ok(ks
                .iter()
                .flat_map(|&k| metrics.iter().map(move |&metric| ParamSet::Knn { k, metric }))
                .collect())
        }
        ClassifierKind::Centroid => {
            if similarities.is_empty() {
                similarities = vec![Similarity::Cosine, Similarity::NegativeEuclidean];
            }
            Ok(similarities
                .into_iter()
                .map(|similarity| ParamSet::Centroid { similarity })
                .collect())
        }
    }
}

fn build_preprocessor(
    stemmer: Option<&PathBuf>,
    tagger: Option<&PathBuf>,
    keep_pos: &[PartOfSpeech],
) -> Result<Preprocessor, String> {
    let stemmer: Box<dyn Stemmer + Send + Sync> = match stemmer {
        Some(path) => Box::new(SuffixRuleStemmer::from_file(path).map_err(|e| e.to_string())?),
        None => Box::new(IdentityStemmer),
    };
    let tagger: Box<dyn PosTagger + Send + Sync> = match tagger {
        Some(path) => Box::new(LexiconTagger::from_file(path).map_err(|e| e.to_string())?),
        None => Box::new(NullTagger),
    };
    Ok(Preprocessor::new(
        stemmer,
        tagger,
        keep_pos.iter().copied().collect::<BTreeSet<_>>(),
    ))
}

fn load_predictions(path: &PathBuf) -> Result<BTreeMap<String, Label>, String> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| format!("failed to read {}: {e}", path.display()))?;
    let mut predictions = BTreeMap::new();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with("id\t") || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields
            .next()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| format!("{}:{}: missing id", path.display(), idx + 1))?;
        let label: Label = fields
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|e| format!("{}:{}: {e}", path.display(), idx + 1))?;
        predictions.insert(id.to_string(), label);
    }
    Ok(predictions)
}

fn dispatch(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Ontology { command } => ontology_cmd(command),
        Command::Graph { command } => graph_cmd(command),
        Command::Seeds { command } => seeds_cmd(command),
        Command::Annotate { command } => annotate_cmd(command),
        Command::Expand(args) => expand_cmd(args),
        Command::Docs { command } => docs_cmd(command),
        Command::Train(args) => train_cmd(args),
        Command::Predict(args) => predict_cmd(args),
        Command::Eval(args) => eval_cmd(args),
        Command::Lexicon { command } => lexicon_cmd(command),
        Command::Config { command } => config_cmd(command),
        Command::Run(args) => run_cmd(args),
    }
}

fn ontology_cmd(command: OntologyCmd) -> Result<ExitCode, String> {
    match command {
        OntologyCmd::Validate { path, lenient } => {
            let ontology =
                Ontology::load(&path, load_mode(lenient)).map_err(|e| e.to_string())?;
            println!(
                "ok: {} synsets, {} warnings",
                ontology.len(),
                ontology.meta().warnings.len()
            );
            for warning in &ontology.meta().warnings {
                println!("warning: {warning}");
            }
            Ok(ExitCode::SUCCESS)
        }
        OntologyCmd::Stats { path } => {
            let ontology = Ontology::load(&path, LoadMode::Strict).map_err(|e| e.to_string())?;
            let stats = ontology.stats();
            println!(
                "{}",
                serde_json::to_string_pretty(&stats).expect("stats serialize")
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn graph_cmd(command: GraphCmd) -> Result<ExitCode, String> {
    match command {
        GraphCmd::Build {
            ontology,
            relations,
            no_symmetrize,
            output,
        } => {
            if relations.is_empty() {
                return Err("--relations must name at least one kind".into());
            }
            let ontology =
                Ontology::load(&ontology, LoadMode::Strict).map_err(|e| e.to_string())?;
            let kinds: BTreeSet<RelationKind> = relations.into_iter().collect();
            let graph = PolarityGraph::build(&ontology, &kinds, !no_symmetrize);
            graph.save(&output).map_err(|e| e.to_string())?;
            println!(
                "graph: {} nodes, {} edges -> {}",
                graph.node_count(),
                graph.edge_count(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        GraphCmd::Scc { graph, output } => {
            let graph = PolarityGraph::load(&graph).map_err(|e| e.to_string())?;
            let partition = graph.kosaraju();
            partition.save(&output).map_err(|e| e.to_string())?;
            println!("components: {}", partition.len());
            for (bucket, count) in partition.histogram() {
                println!("  size {bucket}: {count}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn seeds_cmd(command: SeedsCmd) -> Result<ExitCode, String> {
    match command {
        SeedsCmd::Select {
            partition,
            min_size,
            random,
            rng_seed,
            output,
        } => {
            let partition = SccPartition::load(&partition).map_err(|e| e.to_string())?;
            let seeds = if random {
                partition.select_seeds_random(min_size, rng_seed)
            } else {
                partition.select_seeds(min_size)
            };
            let mut body = seeds.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            std::fs::write(&output, body)
                .map_err(|e| format!("failed to write {}: {e}", output.display()))?;
            println!("selected {} seeds -> {}", seeds.len(), output.display());
            Ok(ExitCode::SUCCESS)
        }
        SeedsCmd::Check {
            graph,
            seeds,
            min_size,
        } => {
            let graph = PolarityGraph::load(&graph).map_err(|e| e.to_string())?;
            let seed_list = read_seed_list(&seeds)?;
            let report = graph
                .check_seed_coverage(&seed_list, min_size)
                .map_err(|e| e.to_string())?;
            if report.is_satisfied() {
                println!(
                    "coverage ok: {} nodes reachable, no qualifying component missed",
                    report.covered.len()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!(
                    "coverage violation: {} nodes in components of size >= {min_size} \
                     are unreachable:",
                    report.uncovered.len()
                );
                for id in &report.uncovered {
                    println!("  {id}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn annotate_cmd(command: AnnotateCmd) -> Result<ExitCode, String> {
    match command {
        AnnotateCmd::Export {
            seeds,
            ontology,
            output,
        } => {
            let ontology =
                Ontology::load(&ontology, LoadMode::Strict).map_err(|e| e.to_string())?;
            let seed_list = read_seed_list(&seeds)?;
            let rows = annotation::export_sheet(&seed_list, &ontology, &output)
                .map_err(|e| e.to_string())?;
            println!("wrote {rows} rows -> {}", output.display());
            Ok(ExitCode::SUCCESS)
        }
        AnnotateCmd::Kappa { sheets } => {
            let set = annotation::import_annotations(&sheets).map_err(|e| e.to_string())?;
            let kappa = set.fleiss_kappa().map_err(|e| e.to_string())?;
            println!(
                "annotators: {}  items: {}",
                set.annotator_count(),
                set.item_count()
            );
            println!("fleiss kappa: {kappa:.6}");
            println!("as percent:   {:.2}%", 100.0 * kappa);
            println!("disagreements: {}", set.disagreements().len());
            Ok(ExitCode::SUCCESS)
        }
        AnnotateCmd::Merge {
            sheets,
            tiebreak,
            output,
        } => {
            let set = annotation::import_annotations(&sheets).map_err(|e| e.to_string())?;
            let tiebreak_map = match tiebreak {
                Some(path) => {
                    annotation::load_tiebreak_sheet(&path).map_err(|e| e.to_string())?
                }
                None => BTreeMap::new(),
            };
            let adjudication = set.adjudicate(&tiebreak_map).map_err(|e| e.to_string())?;
            for warning in &adjudication.warnings {
                eprintln!("warning: {warning}");
            }
            adjudication.gold.save(&output).map_err(|e| e.to_string())?;
            println!(
                "merged {} items ({} adjudicated) -> {}",
                adjudication.gold.len(),
                adjudication.gold.adjudicated_count(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn expand_cmd(args: ExpandArgs) -> Result<ExitCode, String> {
    if let Some(ExpandSub::Matrix {
        ontology,
        seed,
        counts_uni,
        counts_bi,
        max_rounds,
        positive_terms,
        negative_terms,
        signed_only,
        output,
    }) = args.command
    {
        let ontology = Ontology::load(&ontology, LoadMode::Strict).map_err(|e| e.to_string())?;
        let seed = LabeledSeed::load_hand_seed(&seed).map_err(|e| e.to_string())?;
        let counts = NGramCounts::load(&counts_uni, &counts_bi).map_err(|e| e.to_string())?;
        let mut base = ExpansionConfig::case1(Algorithm::Default);
        base.pmi_positive_seeds = positive_terms;
        base.pmi_negative_seeds = negative_terms;
        base.max_rounds = max_rounds;
        base.neutral_propagates = !signed_only;
        let datasets = generate_training_matrix(&ontology, &seed, &counts, &base)
            .map_err(|e| e.to_string())?;
        std::fs::create_dir_all(&output)
            .map_err(|e| format!("failed to create {}: {e}", output.display()))?;
        for dataset in &datasets {
            let path = output.join(format!("{}.tsv", dataset.meta.name));
            dataset
                .entries
                .save(&path, Some(&dataset.meta))
                .map_err(|e| e.to_string())?;
            println!(
                "{}: {} entries (case {}, {})",
                dataset.meta.name,
                dataset.entries.len(),
                dataset.meta.case,
                dataset.meta.algorithm
            );
        }
        return Ok(ExitCode::SUCCESS);
    }

    let ontology_path = args.ontology.ok_or("--ontology is required")?;
    let seed_path = args.seed.ok_or("--seed is required")?;
    let case = args.case.ok_or("--case is required")?;
    let output = args.output.ok_or("--output is required")?;

    let ontology =
        Ontology::load(&ontology_path, LoadMode::Strict).map_err(|e| e.to_string())?;
    let seed = LabeledSeed::load_hand_seed(&seed_path).map_err(|e| e.to_string())?;
    let mut config = ExpansionConfig::case(case, args.algorithm)
        .ok_or_else(|| format!("case must be 1, 2, or 3 (got {case})"))?;
    config.max_rounds = args.max_rounds;
    config.pmi_positive_seeds = args.positive_terms;
    config.pmi_negative_seeds = args.negative_terms;
    config.neutral_propagates = !args.signed_only;

    let counts = match (&args.counts_uni, &args.counts_bi) {
        (Some(uni), Some(bi)) => Some(NGramCounts::load(uni, bi).map_err(|e| e.to_string())?),
        (None, None) => None,
        _ => return Err("--counts-uni and --counts-bi must be given together".into()),
    };
    let expanded =
        expand(&ontology, &seed, &config, counts.as_ref()).map_err(|e| e.to_string())?;
    let meta = DatasetMeta {
        name: output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "expansion".into()),
        case,
        algorithm: args.algorithm,
    };
    expanded
        .save(&output, Some(&meta))
        .map_err(|e| e.to_string())?;
    println!(
        "expanded {} -> {} entries ({} rounds) -> {}",
        seed.len(),
        expanded.len(),
        expanded.max_round(),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn docs_cmd(command: DocsCmd) -> Result<ExitCode, String> {
    match command {
        DocsCmd::Build {
            ontology,
            stemmer,
            tagger,
            keep_pos,
            output,
        } => {
            let ontology =
                Ontology::load(&ontology, LoadMode::Strict).map_err(|e| e.to_string())?;
            let preprocessor =
                build_preprocessor(stemmer.as_ref(), tagger.as_ref(), &keep_pos)?;
            let documents = preprocessor
                .documents(&ontology)
                .map_err(|e| e.to_string())?;
            save_documents(&documents, &output).map_err(|e| e.to_string())?;
            println!(
                "wrote {} documents -> {}",
                documents.len(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        DocsCmd::Vectorize { docs, output } => {
            let documents = load_documents(&docs).map_err(|e| e.to_string())?;
            let vocabulary = Vocabulary::build(&documents);
            let vectors: Vec<_> = documents
                .iter()
                .map(|d| vectorize(d, &vocabulary))
                .collect();
            save_vectors(&vectors, &output).map_err(|e| e.to_string())?;
            println!(
                "vocabulary: {} terms over {} documents; vectors -> {}",
                vocabulary.len(),
                vocabulary.n_docs(),
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn train_cmd(args: TrainArgs) -> Result<ExitCode, String> {
    let documents = load_documents(&args.docs).map_err(|e| e.to_string())?;
    let docs_by_id: BTreeMap<&str, _> = documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let vocabulary = Vocabulary::build(&documents);
    let (dataset, meta) = LabeledSeed::load(&args.data).map_err(|e| e.to_string())?;
    let data: Vec<_> = dataset
        .iter()
        .map(|(id, entry)| {
            let doc = docs_by_id.get(id).ok_or_else(|| {
                format!("dataset id `{id}` has no document in {}", args.docs.display())
            })?;
            Ok((vectorize(doc, &vocabulary), entry.label))
        })
        .collect::<Result<_, String>>()?;

    let grid = parse_grid(args.model, args.grid.as_deref())?;
    let tuning =
        cross_validate(&data, &grid, args.folds, args.score).map_err(|e| e.to_string())?;
    for warning in &tuning.warnings {
        eprintln!("warning: {warning}");
    }
    println!("tuned: {}", tuning.best);
    for (params, score) in &tuning.mean_scores {
        println!("  {params}: mean score {score:.5}");
    }

    let dataset_name = meta.map(|m| m.name).unwrap_or_else(|| {
        args.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let model = TrainedModel::train(vocabulary, &data, tuning.best, dataset_name)
        .map_err(|e| e.to_string())?;
    model.save(&args.output).map_err(|e| e.to_string())?;
    println!("model -> {}", args.output.display());
    Ok(ExitCode::SUCCESS)
}

fn predict_cmd(args: PredictArgs) -> Result<ExitCode, String> {
    let model = TrainedModel::load(&args.model).map_err(|e| e.to_string())?;
    let documents = load_documents(&args.docs).map_err(|e| e.to_string())?;
    let mut body = String::from("id\tlabel\n");
    for doc in &documents {
        let label = model.predict_document(doc);
        body.push_str(&format!("{}\t{label}\n", doc.id));
    }
    std::fs::write(&args.output, body)
        .map_err(|e| format!("failed to write {}: {e}", args.output.display()))?;
    println!(
        "predicted {} documents -> {}",
        documents.len(),
        args.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn eval_cmd(args: EvalArgs) -> Result<ExitCode, String> {
    if let Some(EvalSub::Matrix { dir, group_by }) = args.command {
        let matrix = RunMatrix::load_dir(&dir).map_err(|e| e.to_string())?;
        println!("{}", matrix.summary_table());
        let groups = aggregate_by(&matrix, group_by).map_err(|e| e.to_string())?;
        println!("group\tmean_macro_f");
        for (group, mean) in groups {
            println!("{group}\t{mean:.5}");
        }
        return Ok(ExitCode::SUCCESS);
    }

    let pred = args.pred.ok_or("--pred is required")?;
    let gold_path = args.gold.ok_or("--gold is required")?;
    let predictions = load_predictions(&pred)?;
    let gold = annotation::GoldStandard::load(&gold_path).map_err(|e| e.to_string())?;
    let report = evaluate(&predictions, &gold).map_err(|e| e.to_string())?;
    print!("{}", report.text_table());
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if let Some(output) = args.output {
        report.save(&output).map_err(|e| e.to_string())?;
        println!("report -> {}", output.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn lexicon_cmd(command: LexiconCmd) -> Result<ExitCode, String> {
    match command {
        LexiconCmd::Build {
            ontology,
            model,
            train,
            gold,
            docs,
            stemmer,
            tagger,
            keep_pos,
            format,
            output,
        } => {
            let ontology =
                Ontology::load(&ontology, LoadMode::Strict).map_err(|e| e.to_string())?;
            let model = TrainedModel::load(&model).map_err(|e| e.to_string())?;
            let (training, _) = LabeledSeed::load(&train).map_err(|e| e.to_string())?;
            let gold = annotation::GoldStandard::load(&gold).map_err(|e| e.to_string())?;
            let documents = match docs {
                Some(path) => load_documents(&path).map_err(|e| e.to_string())?,
                None => {
                    let preprocessor =
                        build_preprocessor(stemmer.as_ref(), tagger.as_ref(), &keep_pos)?;
                    preprocessor
                        .documents(&ontology)
                        .map_err(|e| e.to_string())?
                }
            };
            let format = match format.as_str() {
                "tsv" => LexiconFormat::Tsv,
                "jsonl" => LexiconFormat::Jsonl,
                other => {
                    return Err(format!("unknown format `{other}` (expected tsv or jsonl)"))
                }
            };
            let lexicon = build_lexicon(&ontology, &training, &gold, &model, &documents)
                .map_err(|e| e.to_string())?;
            let count = lexicon.export(&output, format).map_err(|e| e.to_string())?;
            println!("lexicon: {count} entries -> {}", output.display());
            let stats = lexicon.stats();
            println!(
                "{}",
                serde_json::to_string_pretty(&stats).expect("stats serialize")
            );
            Ok(ExitCode::SUCCESS)
        }
        LexiconCmd::Stats { path } => {
            let lexicon = SentimentLexicon::import(&path).map_err(|e| e.to_string())?;
            let stats = lexicon.stats();
            println!(
                "{}",
                serde_json::to_string_pretty(&stats).expect("stats serialize")
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn config_cmd(command: ConfigCmd) -> Result<ExitCode, String> {
    match command {
        ConfigCmd::Validate { path } => match validate_config(&path) {
            Err(e) => {
                eprintln!("error: {e}");
                Ok(ExitCode::from(2))
            }
            Ok(report) => {
                for (field, value) in &report.resolved {
                    println!("{field} = {value}");
                }
                if report.is_valid() {
                    println!("config ok");
                    Ok(ExitCode::SUCCESS)
                } else {
                    for problem in &report.problems {
                        eprintln!("problem: {problem}");
                    }
                    Ok(ExitCode::from(2))
                }
            }
        },
    }
}

fn run_cmd(args: RunArgs) -> Result<ExitCode, String> {
    let config = match PipelineConfig::load(&args.config) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    match run_pipeline(&config) {
        Ok(PipelineOutcome::Completed(summary)) => {
            println!("pipeline complete: {}", summary.out_dir.display());
            println!(
                "  stages run: [{}], skipped: [{}]",
                summary.stages_run.join(", "),
                summary.stages_skipped.join(", ")
            );
            println!(
                "  datasets: {}, reports: {}, lexicon: {}",
                summary.dataset_paths.len(),
                summary.report_paths.len(),
                summary.lexicon_path.display()
            );
            println!(
                "  selected: {} / {} ({})",
                summary.selected.dataset, summary.selected.classifier, summary.selected_params
            );
            Ok(ExitCode::SUCCESS)
        }
        Ok(PipelineOutcome::AwaitingAnnotation { message, .. }) => {
            println!("{message}");
            Ok(ExitCode::from(4))
        }
        Err(PipelineError::Config { message }) => {
            eprintln!("error: config error: {message}");
            Ok(ExitCode::from(2))
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(3))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_spec_parses_knn_and_centroid_forms() {
        let knn = parse_grid(
            ClassifierKind::Knn,
            Some("k=1,3;metric=cosine-distance,euclidean"),
        )
        .unwrap();
        assert_eq!(knn.len(), 4);
        assert!(knn.contains(&ParamSet::Knn {
            k: 3,
            metric: Metric::Euclidean
        }));

        let centroid = parse_grid(ClassifierKind::Centroid, Some("similarity=cosine")).unwrap();
        assert_eq!(
            centroid,
            vec![ParamSet::Centroid {
                similarity: Similarity::Cosine
            }]
        );

        assert!(parse_grid(ClassifierKind::Knn, Some("q=1")).is_err());
    }

    #[test]
    fn default_grids_are_used_without_spec() {
        assert_eq!(parse_grid(ClassifierKind::Knn, None).unwrap().len(), 16);
        assert_eq!(parse_grid(ClassifierKind::Centroid, None).unwrap().len(), 2);
    }
}
