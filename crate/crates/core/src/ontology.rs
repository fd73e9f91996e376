//! Loading, validating, and querying a wordnet-style ontology.
//!
//! The on-disk format is UTF-8 JSON Lines: one synset object per line with
//! fields `id`, `pos`, `senses`, `gloss`, `examples`, and `relations`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate synset id `{id}`")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("synset `{id}`: relation targets unknown synset `{target}`")]
    DanglingRelation { id: String, target: String },
    #[error("synset `{id}`: {kind} relation points back at the owning synset")]
    SelfLoop { id: String, kind: RelationKind },
}

/// Part of speech of a synset.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl PartOfSpeech {
    pub const ALL: [PartOfSpeech; 4] = [
        PartOfSpeech::Noun,
        PartOfSpeech::Verb,
        PartOfSpeech::Adjective,
        PartOfSpeech::Adverb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::Adverb => "adverb",
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noun" => Ok(PartOfSpeech::Noun),
            "verb" => Ok(PartOfSpeech::Verb),
            "adjective" => Ok(PartOfSpeech::Adjective),
            "adverb" => Ok(PartOfSpeech::Adverb),
            other => Err(format!(
                "unknown part of speech `{other}` (expected noun, verb, adjective, or adverb)"
            )),
        }
    }
}

/// Kind of a typed relation between two synsets.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Antonym,
    Synonym,
    Hypernym,
    Hyponym,
}

impl RelationKind {
    pub const ALL: [RelationKind; 4] = [
        RelationKind::Antonym,
        RelationKind::Synonym,
        RelationKind::Hypernym,
        RelationKind::Hyponym,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Antonym => "antonym",
            RelationKind::Synonym => "synonym",
            RelationKind::Hypernym => "hypernym",
            RelationKind::Hyponym => "hyponym",
        }
    }

    /// Kind of the reverse edge under symmetrization: antonymy and synonymy
    /// mirror to themselves, hypernymy and hyponymy mirror to each other.
    pub fn mirrored(self) -> RelationKind {
        match self {
            RelationKind::Antonym => RelationKind::Antonym,
            RelationKind::Synonym => RelationKind::Synonym,
            RelationKind::Hypernym => RelationKind::Hyponym,
            RelationKind::Hyponym => RelationKind::Hypernym,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "antonym" => Ok(RelationKind::Antonym),
            "synonym" => Ok(RelationKind::Synonym),
            "hypernym" => Ok(RelationKind::Hypernym),
            "hyponym" => Ok(RelationKind::Hyponym),
            other => Err(format!(
                "unknown relation kind `{other}` (expected antonym, synonym, hypernym, or hyponym)"
            )),
        }
    }
}

/// Typed link from the owning synset to another synset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub target: String,
}

/// One ontology entry: senses, gloss, examples, and typed relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub id: String,
    pub pos: PartOfSpeech,
    pub senses: Vec<String>,
    #[serde(default)]
    pub gloss: String,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

/// Raw per-line record; `pos` and relation kinds stay strings so lenient
/// loading can drop what it does not understand instead of failing the line.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    pos: String,
    senses: Vec<String>,
    #[serde(default)]
    gloss: String,
    #[serde(default)]
    examples: Vec<String>,
    #[serde(default)]
    relations: Vec<RawRelation>,
}

#[derive(Deserialize)]
struct RawRelation {
    kind: String,
    target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Reject duplicate ids, unknown relation kinds, self-loops, and
    /// dangling relation targets.
    Strict,
    /// Drop bad relations with a warning; duplicate ids and malformed
    /// records are still errors.
    Lenient,
}

/// Source metadata recorded while loading.
#[derive(Debug, Clone, Default)]
pub struct OntologyMeta {
    pub path: Option<PathBuf>,
    pub record_count: usize,
    pub warnings: Vec<String>,
}

/// Immutable synset collection keyed by id.
#[derive(Debug, Clone)]
pub struct Ontology {
    synsets: BTreeMap<String, Synset>,
    meta: OntologyMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OntologyStats {
    pub synset_count: usize,
    pub by_pos: BTreeMap<PartOfSpeech, usize>,
    pub relation_count: usize,
    pub by_relation: BTreeMap<RelationKind, usize>,
}

impl Ontology {
    /// Load a JSON Lines ontology file.
    pub fn load(path: impl AsRef<Path>, mode: LoadMode) -> Result<Ontology, OntologyError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| OntologyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = BufReader::new(file);

        let mut synsets: BTreeMap<String, Synset> = BTreeMap::new();
        let mut line_of: BTreeMap<String, usize> = BTreeMap::new();
        let mut warnings = Vec::new();
        let mut record_count = 0usize;

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| OntologyError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord =
                serde_json::from_str(&line).map_err(|e| OntologyError::Malformed {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: e.to_string(),
                })?;
            let synset = validate_record(raw, path, line_no, mode, &mut warnings)?;
            if synsets.contains_key(&synset.id) {
                return Err(OntologyError::DuplicateId {
                    path: path.to_path_buf(),
                    line: line_no,
                    id: synset.id,
                });
            }
            line_of.insert(synset.id.clone(), line_no);
            synsets.insert(synset.id.clone(), synset);
            record_count += 1;
        }

        resolve_targets(&mut synsets, mode, &mut warnings)?;

        Ok(Ontology {
            synsets,
            meta: OntologyMeta {
                path: Some(path.to_path_buf()),
                record_count,
                warnings,
            },
        })
    }

    /// Build an ontology in memory, enforcing the same strict invariants as
    /// a strict-mode load.
    pub fn from_synsets(
        synsets: impl IntoIterator<Item = Synset>,
    ) -> Result<Ontology, OntologyError> {
        let mut map: BTreeMap<String, Synset> = BTreeMap::new();
        for synset in synsets {
            if synset.id.is_empty() {
                return Err(OntologyError::Malformed {
                    path: PathBuf::from("<memory>"),
                    line: 0,
                    message: "empty synset id".into(),
                });
            }
            if synset.senses.is_empty() || synset.senses.iter().any(|s| s.is_empty()) {
                return Err(OntologyError::Malformed {
                    path: PathBuf::from("<memory>"),
                    line: 0,
                    message: format!("synset `{}` has an empty sense list or sense", synset.id),
                });
            }
            if let Some(rel) = synset.relations.iter().find(|r| r.target == synset.id) {
                return Err(OntologyError::SelfLoop {
                    id: synset.id,
                    kind: rel.kind,
                });
            }
            if map.contains_key(&synset.id) {
                return Err(OntologyError::DuplicateId {
                    path: PathBuf::from("<memory>"),
                    line: 0,
                    id: synset.id,
                });
            }
            map.insert(synset.id.clone(), synset);
        }
        let mut warnings = Vec::new();
        let record_count = map.len();
        resolve_targets(&mut map, LoadMode::Strict, &mut warnings)?;
        Ok(Ontology {
            synsets: map,
            meta: OntologyMeta {
                path: None,
                record_count,
                warnings,
            },
        })
    }

    pub fn get(&self, id: &str) -> Option<&Synset> {
        self.synsets.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.synsets.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    /// Synset ids in sorted order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.synsets.keys().map(|s| s.as_str())
    }

    /// Synsets in id order.
    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values()
    }

    pub fn meta(&self) -> &OntologyMeta {
        &self.meta
    }

    /// Serialize back to JSON Lines, id-sorted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for synset in self.synsets.values() {
            out.push_str(&serde_json::to_string(synset).expect("synset serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), OntologyError> {
        let path = path.as_ref();
        let mut file = File::create(path).map_err(|source| OntologyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|source| OntologyError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Synset counts per part of speech and relation counts per kind.
    pub fn stats(&self) -> OntologyStats {
        let mut by_pos: BTreeMap<PartOfSpeech, usize> =
            PartOfSpeech::ALL.iter().map(|&p| (p, 0)).collect();
        let mut by_relation: BTreeMap<RelationKind, usize> =
            RelationKind::ALL.iter().map(|&k| (k, 0)).collect();
        let mut relation_count = 0usize;
        for synset in self.synsets.values() {
            *by_pos.get_mut(&synset.pos).expect("all pos present") += 1;
            for rel in &synset.relations {
                *by_relation.get_mut(&rel.kind).expect("all kinds present") += 1;
                relation_count += 1;
            }
        }
        OntologyStats {
            synset_count: self.synsets.len(),
            by_pos,
            relation_count,
            by_relation,
        }
    }
}

impl PartialEq for Ontology {
    /// Structural equality over synsets; load metadata is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.synsets == other.synsets
    }
}

fn validate_record(
    raw: RawRecord,
    path: &Path,
    line_no: usize,
    mode: LoadMode,
    warnings: &mut Vec<String>,
) -> Result<Synset, OntologyError> {
    let malformed = |message: String| OntologyError::Malformed {
        path: path.to_path_buf(),
        line: line_no,
        message,
    };

    if raw.id.is_empty() {
        return Err(malformed("empty synset id".into()));
    }
    let pos: PartOfSpeech = raw.pos.parse().map_err(malformed)?;
    if raw.senses.is_empty() {
        return Err(malformed(format!("synset `{}` has no senses", raw.id)));
    }
    if raw.senses.iter().any(|s| s.is_empty()) {
        return Err(malformed(format!("synset `{}` has an empty sense", raw.id)));
    }

    let mut relations = Vec::with_capacity(raw.relations.len());
    for rel in raw.relations {
        let kind = match rel.kind.parse::<RelationKind>() {
            Ok(kind) => kind,
            Err(msg) => match mode {
                LoadMode::Strict => return Err(malformed(msg)),
                LoadMode::Lenient => {
                    warnings.push(format!(
                        "{}:{line_no}: synset `{}`: dropped relation with {msg}",
                        path.display(),
                        raw.id
                    ));
                    continue;
                }
            },
        };
        if rel.target == raw.id {
            match mode {
                LoadMode::Strict => {
                    return Err(OntologyError::SelfLoop { id: raw.id, kind });
                }
                LoadMode::Lenient => {
                    warnings.push(format!(
                        "{}:{line_no}: synset `{}`: dropped self-loop {kind} relation",
                        path.display(),
                        raw.id
                    ));
                    continue;
                }
            }
        }
        relations.push(Relation {
            kind,
            target: rel.target,
        });
    }

    Ok(Synset {
        id: raw.id,
        pos,
        senses: raw.senses,
        gloss: raw.gloss,
        examples: raw.examples,
        relations,
    })
}

/// Second pass: every relation target must resolve. Strict mode errors,
/// lenient mode drops the relation and records a warning.
fn resolve_targets(
    synsets: &mut BTreeMap<String, Synset>,
    mode: LoadMode,
    warnings: &mut Vec<String>,
) -> Result<(), OntologyError> {
    let ids: Vec<String> = synsets.keys().cloned().collect();
    for id in &ids {
        let dangling: Vec<(RelationKind, String)> = synsets[id]
            .relations
            .iter()
            .filter(|r| !synsets.contains_key(&r.target))
            .map(|r| (r.kind, r.target.clone()))
            .collect();
        if dangling.is_empty() {
            continue;
        }
        match mode {
            LoadMode::Strict => {
                let (_, target) = dangling.into_iter().next().expect("non-empty");
                return Err(OntologyError::DanglingRelation {
                    id: id.clone(),
                    target,
                });
            }
            LoadMode::Lenient => {
                for (kind, target) in &dangling {
                    warnings.push(format!(
                        "synset `{id}`: dropped {kind} relation to unknown synset `{target}`"
                    ));
                }
                let synset = synsets.get_mut(id).expect("id present");
                synset.relations.retain(|r| !dangling
                    .iter()
                    .any(|(k, t)| *k == r.kind && *t == r.target));
            }
        }
    }
    Ok(())
}
