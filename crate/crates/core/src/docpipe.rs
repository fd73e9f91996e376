//! Gloss documents: generation, preprocessing, and TF-IDF vectorization.
//!
//! A synset's document is the concatenation of its gloss, senses, and
//! examples. Preprocessing tokenizes, stems, and POS-filters through
//! pluggable stemmer/tagger hooks so the pipeline stays language-agnostic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::label::Label;
use crate::ontology::{Ontology, PartOfSpeech, Synset};

#[derive(Debug, Error)]
pub enum DocPipeError {
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
    #[error("plugin failed on token `{token}`: {message}")]
    Plugin { token: String, message: String },
}

/// Sentence-terminal punctuation; covers latin and arabic-script stops.
const SENTENCE_TERMINALS: [char; 5] = ['.', '!', '?', '\u{061F}', '\u{06D4}'];

/// Concatenate gloss, senses, and examples with single spaces, skipping
/// empty parts.
pub fn synset_to_document(synset: &Synset) -> String {
    let mut parts: Vec<&str> = Vec::new();
    if !synset.gloss.trim().is_empty() {
        parts.push(synset.gloss.trim());
    }
    for sense in &synset.senses {
        if !sense.trim().is_empty() {
            parts.push(sense.trim());
        }
    }
    for example in &synset.examples {
        if !example.trim().is_empty() {
            parts.push(example.trim());
        }
    }
    parts
        .join(" ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Split into sentences on terminal punctuation, then into tokens on
/// whitespace and punctuation. Punctuation never becomes a token; digits
/// are kept.
pub fn tokenize(text: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut sentence: Vec<String> = Vec::new();
    let mut token = String::new();

    for ch in text.chars() {
        if ch.is_alphanumeric() {
            token.push(ch);
            continue;
        }
        if !token.is_empty() {
            sentence.push(std::mem::take(&mut token));
        }
        if SENTENCE_TERMINALS.contains(&ch) && !sentence.is_empty() {
            sentences.push(std::mem::take(&mut sentence));
        }
    }
    if !token.is_empty() {
        sentence.push(token);
    }
    if !sentence.is_empty() {
        sentences.push(sentence);
    }
    sentences
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct PluginError {
    pub message: String,
}

/// Reduces a token to a stem or lemma.
pub trait Stemmer {
    fn stem(&self, token: &str) -> Result<String, PluginError>;
}

/// Assigns a part of speech to a token; `None` means untagged.
pub trait PosTagger {
    fn tag(&self, token: &str) -> Result<Option<PartOfSpeech>, PluginError>;
}

/// Default stemmer: tokens pass through unchanged.
#[derive(Debug, Clone, Default)]
pub struct IdentityStemmer;

impl Stemmer for IdentityStemmer {
    fn stem(&self, token: &str) -> Result<String, PluginError> {
        Ok(token.to_string())
    }
}

/// Suffix-strip stemmer driven by a TSV rule table `suffix<TAB>replacement`.
/// The longest matching suffix wins; a rule never empties a token.
#[derive(Debug, Clone)]
pub struct SuffixRuleStemmer {
    rules: Vec<(String, String)>,
}

impl SuffixRuleStemmer {
    pub fn from_rules(mut rules: Vec<(String, String)>) -> SuffixRuleStemmer {
        rules.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        SuffixRuleStemmer { rules }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<SuffixRuleStemmer, DocPipeError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DocPipeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rules = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| DocPipeError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (suffix, replacement) = line.split_once('\t').unwrap_or((line.as_str(), ""));
            if suffix.is_empty() {
                return Err(DocPipeError::Malformed {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: "empty suffix".into(),
                });
            }
            rules.push((suffix.to_string(), replacement.trim().to_string()));
        }
        Ok(Self::from_rules(rules))
    }
}

impl Stemmer for SuffixRuleStemmer {
    fn stem(&self, token: &str) -> Result<String, PluginError> {
        for (suffix, replacement) in &self.rules {
            if let Some(stripped) = token.strip_suffix(suffix.as_str()) {
                let candidate = format!("{stripped}{replacement}");
                if !candidate.is_empty() {
                    return Ok(candidate);
                }
            }
        }
        Ok(token.to_string())
    }
}

/// Default tagger: leaves every token untagged (and therefore kept).
#[derive(Debug, Clone, Default)]
pub struct NullTagger;

impl PosTagger for NullTagger {
    fn tag(&self, _token: &str) -> Result<Option<PartOfSpeech>, PluginError> {
        Ok(None)
    }
}

/// Lookup tagger driven by a TSV lexicon `token<TAB>tag`.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    map: HashMap<String, PartOfSpeech>,
}

impl LexiconTagger {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, PartOfSpeech)>) -> Self {
        LexiconTagger {
            map: entries.into_iter().collect(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<LexiconTagger, DocPipeError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DocPipeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut map = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| DocPipeError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, tag) = line.split_once('\t').ok_or_else(|| DocPipeError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: "expected `token<TAB>tag`".into(),
            })?;
            let pos: PartOfSpeech = tag.trim().parse().map_err(|e: String| {
                DocPipeError::Malformed {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: e,
                }
            })?;
            map.insert(token.to_string(), pos);
        }
        Ok(LexiconTagger { map })
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, token: &str) -> Result<Option<PartOfSpeech>, PluginError> {
        Ok(self.map.get(token).copied())
    }
}

/// Stem each token, tag it, and drop tagged tokens whose part of speech is
/// not kept. Untagged tokens are kept.
pub fn normalize(
    tokens: &[String],
    stemmer: &dyn Stemmer,
    tagger: &dyn PosTagger,
    keep_pos: &BTreeSet<PartOfSpeech>,
) -> Result<Vec<String>, DocPipeError> {
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        let wrap = |e: PluginError| DocPipeError::Plugin {
            token: token.clone(),
            message: e.message,
        };
        let stemmed = stemmer.stem(token).map_err(wrap)?;
        match tagger.tag(&stemmed).map_err(wrap)? {
            Some(pos) if !keep_pos.contains(&pos) => {}
            _ => out.push(stemmed),
        }
    }
    Ok(out)
}

/// A synset rendered as a preprocessed document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlossDocument {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<Label>,
}

/// Bundled preprocessing configuration applied uniformly to every synset.
pub struct Preprocessor {
    stemmer: Box<dyn Stemmer + Send + Sync>,
    tagger: Box<dyn PosTagger + Send + Sync>,
    keep_pos: BTreeSet<PartOfSpeech>,
}

impl Preprocessor {
    pub fn new(
        stemmer: Box<dyn Stemmer + Send + Sync>,
        tagger: Box<dyn PosTagger + Send + Sync>,
        keep_pos: BTreeSet<PartOfSpeech>,
    ) -> Preprocessor {
        Preprocessor {
            stemmer,
            tagger,
            keep_pos,
        }
    }

    /// Identity stemmer, null tagger, default keep set.
    pub fn identity() -> Preprocessor {
        Preprocessor::new(
            Box::new(IdentityStemmer),
            Box::new(NullTagger),
            Self::default_keep_pos(),
        )
    }

    /// Nouns and adjectives carry most of the polarity signal.
    pub fn default_keep_pos() -> BTreeSet<PartOfSpeech> {
        [PartOfSpeech::Noun, PartOfSpeech::Adjective]
            .into_iter()
            .collect()
    }

    pub fn process_text(&self, text: &str) -> Result<Vec<String>, DocPipeError> {
        let mut tokens = Vec::new();
        for sentence in tokenize(text) {
            tokens.extend(normalize(
                &sentence,
                self.stemmer.as_ref(),
                self.tagger.as_ref(),
                &self.keep_pos,
            )?);
        }
        Ok(tokens)
    }

    pub fn document(&self, synset: &Synset) -> Result<GlossDocument, DocPipeError> {
        let text = synset_to_document(synset);
        let tokens = self.process_text(&text)?;
        Ok(GlossDocument {
            id: synset.id.clone(),
            text,
            tokens,
            label: None,
        })
    }

    /// One document per synset, id-sorted.
    pub fn documents(&self, ontology: &Ontology) -> Result<Vec<GlossDocument>, DocPipeError> {
        ontology.synsets().map(|s| self.document(s)).collect()
    }
}

/// Term index with document frequencies over a document collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Terms in lexicographic order; the position is the term index.
    terms: Vec<String>,
    /// Document frequency per term, parallel to `terms`.
    df: Vec<usize>,
    n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build from preprocessed documents. Term indices are lexicographic.
    pub fn build(documents: &[GlossDocument]) -> Vocabulary {
        let mut df_map: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in documents {
            let unique: BTreeSet<&str> = doc.tokens.iter().map(|t| t.as_str()).collect();
            for term in unique {
                *df_map.entry(term).or_insert(0) += 1;
            }
        }
        let terms: Vec<String> = df_map.keys().map(|t| t.to_string()).collect();
        let df: Vec<usize> = df_map.values().copied().collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            df,
            n_docs: documents.len(),
            index,
        }
    }

    /// Rebuild the term index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(|s| s.as_str())
    }

    pub fn df(&self, index: usize) -> Option<usize> {
        self.df.get(index).copied()
    }

    /// Smoothed inverse document frequency: `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let df = self.df[index] as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    /// Hex digest over terms, document frequencies, and corpus size; model
    /// files store it so prediction can refuse a mismatched vocabulary.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (term, df) in self.terms.iter().zip(&self.df) {
            hasher.update(term.as_bytes());
            hasher.update([0u8]);
            hasher.update(df.to_le_bytes());
        }
        hasher.update(self.n_docs.to_le_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Sparse L2-normalized TF-IDF vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub id: String,
    /// (term index, weight) pairs sorted by index.
    weights: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn from_parts(id: String, mut weights: Vec<(usize, f64)>) -> FeatureVector {
        weights.sort_by_key(|&(i, _)| i);
        FeatureVector { id, weights }
    }

    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let mut sum = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.weights.len() && j < other.weights.len() {
            let (ai, aw) = self.weights[i];
            let (bi, bw) = other.weights[j];
            match ai.cmp(&bi) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += aw * bw;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// Raw term frequency times smoothed IDF, L2-normalized. Out-of-vocabulary
/// tokens are ignored; a document with no in-vocabulary token vectorizes to
/// the empty vector.
pub fn vectorize(document: &GlossDocument, vocabulary: &Vocabulary) -> FeatureVector {
    let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
    for token in &document.tokens {
        if let Some(idx) = vocabulary.index_of(token) {
            *tf.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let mut weights: Vec<(usize, f64)> = tf
        .into_iter()
        .map(|(idx, count)| (idx, count * vocabulary.idf(idx)))
        .collect();
    let norm = weights.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut weights {
            *w /= norm;
        }
    }
    FeatureVector {
        id: document.id.clone(),
        weights,
    }
}

/// Write documents as JSON Lines.
pub fn save_documents(
    documents: &[GlossDocument],
    path: impl AsRef<Path>,
) -> Result<(), DocPipeError> {
    let path = path.as_ref();
    let io_err = |source| DocPipeError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    for doc in documents {
        let line = serde_json::to_string(doc).expect("document serializes");
        writeln!(file, "{line}").map_err(io_err)?;
    }
    Ok(())
}

pub fn load_documents(path: impl AsRef<Path>) -> Result<Vec<GlossDocument>, DocPipeError> {
    let path = path.as_ref();
    let io_err = |source| DocPipeError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut documents = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: GlossDocument =
            serde_json::from_str(&line).map_err(|e| DocPipeError::Malformed {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        documents.push(doc);
    }
    Ok(documents)
}

/// Sparse vector cache: one `id<TAB>index:weight index:weight ...` line per
/// document.
pub fn save_vectors(
    vectors: &[FeatureVector],
    path: impl AsRef<Path>,
) -> Result<(), DocPipeError> {
    let path = path.as_ref();
    let io_err = |source| DocPipeError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    for vector in vectors {
        let cells: Vec<String> = vector
            .weights
            .iter()
            .map(|(i, w)| format!("{i}:{w}"))
            .collect();
        writeln!(file, "{}\t{}", vector.id, cells.join(" ")).map_err(io_err)?;
    }
    Ok(())
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>, DocPipeError> {
    let path = path.as_ref();
    let io_err = |source| DocPipeError::Io {
        path: path.to_path_buf(),
        source,
    };
    let malformed = |line: usize, message: String| DocPipeError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut vectors = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| malformed(line_no, "expected `id<TAB>cells`".into()))?;
        let mut weights = Vec::new();
        for cell in rest.split_whitespace() {
            let (i, w) = cell
                .split_once(':')
                .ok_or_else(|| malformed(line_no, format!("bad cell `{cell}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| malformed(line_no, format!("bad index in `{cell}`")))?;
            let w: f64 = w
                .parse()
                .map_err(|_| malformed(line_no, format!("bad weight in `{cell}`")))?;
            weights.push((i, w));
        }
        vectors.push(FeatureVector::from_parts(id.to_string(), weights));
    }
    Ok(vectors)
}
