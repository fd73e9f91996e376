//! lexforge: sentiment lexicon induction over wordnet-style ontologies.
//!
//! The pipeline stages map onto the top-level modules:
//!
//! - [`ontology`] — load and validate a JSON Lines ontology.
//! - [`seedgraph`] — relation graph, strongly connected components
//!   (Kosaraju), and minimal seed selection.
//! - [`annotation`] — annotation sheets, Fleiss' kappa, adjudication.
//! - [`counts`] — unigram/bigram count tables for PMI.
//! - [`expansion`] — bootstrapped seed expansion over relations, optionally
//!   PMI-guided; generates the six training datasets.
//! - [`docpipe`] — gloss documents, tokenization, pluggable
//!   stemming/tagging, TF-IDF vectors.
//! - [`classify`] — KNN and nearest-centroid classifiers with stratified
//!   cross-validation.
//! - [`evaluate`] — confusion-matrix reports and run-matrix aggregation.
//! - [`lexicon`] — final lexicon assembly and export.
//! - [`pipeline`] — config-driven orchestration with stage caching.
//! - [`cli`] — the `lexforge` command-line surface.

pub mod annotation;
pub mod classify;
pub mod cli;
pub mod counts;
pub mod docpipe;
pub mod evaluate;
pub mod expansion;
pub mod label;
pub mod lexicon;
pub mod logging;
pub mod ontology;
pub mod pipeline;
pub mod seedgraph;

pub use label::Label;
pub use ontology::{LoadMode, Ontology, PartOfSpeech, Relation, RelationKind, Synset};
