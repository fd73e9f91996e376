//! Final sentiment lexicon assembly: one label per synset with provenance.
//!
//! Hand-verified labels always win: gold beats the training seed, and both
//! beat the classifier, which only fills in the synsets nothing else covers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::GoldStandard;
use crate::classify::TrainedModel;
use crate::docpipe::GlossDocument;
use crate::expansion::{LabeledSeed, SeedSource};
use crate::label::Label;
use crate::ontology::{Ontology, PartOfSpeech};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no document available for synset `{id}`; the document set does not cover the ontology")]
    MissingDocument { id: String },
    #[error("training entry `{id}` does not exist in the ontology")]
    UnknownTrainingId { id: String },
}

/// Where a lexicon label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    HandSeed,
    Expansion,
    Gold,
    Classifier,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::HandSeed => "hand-seed",
            LabelSource::Expansion => "expansion",
            LabelSource::Gold => "gold",
            LabelSource::Classifier => "classifier",
        }
    }
}

impl std::fmt::Display for LabelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LabelSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hand-seed" => Ok(LabelSource::HandSeed),
            "expansion" => Ok(LabelSource::Expansion),
            "gold" => Ok(LabelSource::Gold),
            "classifier" => Ok(LabelSource::Classifier),
            other => Err(format!("unknown label source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub pos: PartOfSpeech,
    pub label: Label,
    pub source: LabelSource,
}

/// Build provenance; lives in a sidecar file so exports stay byte-identical
/// across rebuilds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub model: String,
    pub dataset: String,
    pub timestamp: String,
}

/// The deliverable: a total mapping synset id -> label.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, LexiconEntry>,
    pub metadata: Option<BuildMetadata>,
}

impl PartialEq for SentimentLexicon {
    /// Structural equality over entries; build metadata is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LexiconStats {
    pub total: usize,
    pub by_label: BTreeMap<Label, usize>,
    pub by_source: BTreeMap<LabelSource, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconFormat {
    Tsv,
    Jsonl,
}

#[derive(Serialize, Deserialize)]
struct JsonlRow {
    id: String,
    pos: PartOfSpeech,
    label: Label,
    source: LabelSource,
}

/// Label every synset: gold first, then the training seed (hand entries as
/// hand-seed, grown entries as expansion), then the classifier for the rest.
pub fn build_lexicon(
    ontology: &Ontology,
    training: &LabeledSeed,
    gold: &GoldStandard,
    model: &TrainedModel,
    documents: &[GlossDocument],
) -> Result<SentimentLexicon, LexiconError> {
    for (id, _) in training.iter() {
        if !ontology.contains(id) {
            return Err(LexiconError::UnknownTrainingId { id: id.to_string() });
        }
    }
    let documents_by_id: BTreeMap<&str, &GlossDocument> =
        documents.iter().map(|d| (d.id.as_str(), d)).collect();

    let mut entries = BTreeMap::new();
    for synset in ontology.synsets() {
        let entry = if let Some(gold_entry) = gold.get(&synset.id) {
            LexiconEntry {
                pos: synset.pos,
                label: gold_entry.label,
                source: LabelSource::Gold,
            }
        } else if let Some(seed_entry) = training.get(&synset.id) {
            LexiconEntry {
                pos: synset.pos,
                label: seed_entry.label,
                source: if seed_entry.source == SeedSource::Hand {
                    LabelSource::HandSeed
                } else {
                    LabelSource::Expansion
                },
            }
        } else {
            let document = documents_by_id.get(synset.id.as_str()).ok_or_else(|| {
                LexiconError::MissingDocument {
                    id: synset.id.clone(),
                }
            })?;
            LexiconEntry {
                pos: synset.pos,
                label: model.predict_document(document),
                source: LabelSource::Classifier,
            }
        };
        entries.insert(synset.id.clone(), entry);
    }

    Ok(SentimentLexicon {
        entries,
        metadata: None,
    })
}

impl SentimentLexicon {
    pub fn from_entries(entries: BTreeMap<String, LexiconEntry>) -> SentimentLexicon {
        SentimentLexicon {
            entries,
            metadata: None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&LexiconEntry> {
        self.entries.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &LexiconEntry)> {
        self.entries.iter().map(|(id, e)| (id.as_str(), e))
    }

    pub fn stats(&self) -> LexiconStats {
        let mut by_label: BTreeMap<Label, usize> =
            Label::ALL.iter().map(|&l| (l, 0)).collect();
        let mut by_source = BTreeMap::new();
        for entry in self.entries.values() {
            *by_label.get_mut(&entry.label).expect("all labels present") += 1;
            *by_source.entry(entry.source).or_insert(0) += 1;
        }
        LexiconStats {
            total: self.entries.len(),
            by_label,
            by_source,
        }
    }

    /// Write id-sorted records; returns the record count.
    pub fn export(
        &self,
        path: impl AsRef<Path>,
        format: LexiconFormat,
    ) -> Result<usize, LexiconError> {
        let path = path.as_ref();
        let io_err = |source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = File::create(path).map_err(io_err)?;
        match format {
            LexiconFormat::Tsv => {
                writeln!(file, "id\tpos\tlabel\tsource").map_err(io_err)?;
                for (id, entry) in &self.entries {
                    writeln!(
                        file,
                        "{id}\t{}\t{}\t{}",
                        entry.pos, entry.label, entry.source
                    )
                    .map_err(io_err)?;
                }
            }
            LexiconFormat::Jsonl => {
                for (id, entry) in &self.entries {
                    let row = JsonlRow {
                        id: id.clone(),
                        pos: entry.pos,
                        label: entry.label,
                        source: entry.source,
                    };
                    writeln!(file, "{}", serde_json::to_string(&row).expect("row serializes"))
                        .map_err(io_err)?;
                }
            }
        }
        Ok(self.entries.len())
    }

    /// Read either export format back; the format is sniffed from the first
    /// non-empty line.
    pub fn import(path: impl AsRef<Path>) -> Result<SentimentLexicon, LexiconError> {
        let path = path.as_ref();
        let io_err = |source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        };
        let malformed = |line: usize, message: String| LexiconError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };

        let file = File::open(path).map_err(io_err)?;
        let mut entries = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(io_err)?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("id\t") {
                continue;
            }
            if trimmed.starts_with('{') {
                let row: JsonlRow = serde_json::from_str(trimmed)
                    .map_err(|e| malformed(line_no, e.to_string()))?;
                entries.insert(
                    row.id,
                    LexiconEntry {
                        pos: row.pos,
                        label: row.label,
                        source: row.source,
                    },
                );
            } else {
                let fields: Vec<&str> = trimmed.split('\t').collect();
                if fields.len() < 4 {
                    return Err(malformed(line_no, "expected id, pos, label, source".into()));
                }
                let pos: PartOfSpeech = fields[1]
                    .parse()
                    .map_err(|e: String| malformed(line_no, e))?;
                let label: Label = fields[2].parse().map_err(
                    |e: crate::label::ParseLabelError| malformed(line_no, e.to_string()),
                )?;
                let source: LabelSource = fields[3]
                    .parse()
                    .map_err(|e: String| malformed(line_no, e))?;
                entries.insert(fields[0].to_string(), LexiconEntry { pos, label, source });
            }
        }
        Ok(SentimentLexicon {
            entries,
            metadata: None,
        })
    }

    /// Sidecar metadata path for a given export path.
    pub fn metadata_path(path: &Path) -> PathBuf {
        let mut name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        name.push_str(".meta.json");
        path.with_file_name(name)
    }

    pub fn save_metadata(&self, export_path: &Path) -> Result<(), LexiconError> {
        if let Some(metadata) = &self.metadata {
            let path = Self::metadata_path(export_path);
            let body =
                serde_json::to_string_pretty(metadata).expect("metadata serializes");
            std::fs::write(&path, body).map_err(|source| LexiconError::Io {
                path,
                source,
            })?;
        }
        Ok(())
    }
}
