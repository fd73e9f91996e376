//! Bootstrapped seed expansion over ontology relations.
//!
//! Labels spread outward from the hand-annotated seeds in breadth-first
//! rounds. Synonymy, hypernymy, and hyponymy carry a label unchanged while
//! antonymy flips its sign; the PMI variant overrides the relation rule from
//! round 2 on with the corpus-derived semantic orientation of the synset's
//! senses, falling back to the relation rule whenever the counts cannot
//! decide.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::NGramCounts;
use crate::label::Label;
use crate::ontology::{Ontology, PartOfSpeech, RelationKind, Synset};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("the pmi algorithm requires unigram/bigram counts")]
    CountsRequired,
    #[error("seed entry `{id}` must be a round-0 hand label (found round {round})")]
    NotAHandSeed { id: String, round: u32 },
    #[error("seed id `{id}` does not exist in the ontology")]
    UnknownSeed { id: String },
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
}

/// Which expansion rule assigns labels after round 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Default,
    Pmi,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Default => "default",
            Algorithm::Pmi => "pmi",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Algorithm::Default),
            "pmi" => Ok(Algorithm::Pmi),
            other => Err(format!("unknown algorithm `{other}` (expected default or pmi)")),
        }
    }
}

/// Which synsets may receive labels during growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosFilter {
    All,
    AdjectivesOnly,
}

impl PosFilter {
    fn admits(self, pos: PartOfSpeech) -> bool {
        match self {
            PosFilter::All => true,
            PosFilter::AdjectivesOnly => pos == PartOfSpeech::Adjective,
        }
    }
}

/// Full parameterization of one expansion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub pos_filter: PosFilter,
    pub relation_kinds: BTreeSet<RelationKind>,
    pub algorithm: Algorithm,
    /// 0 means run to fixed point.
    pub max_rounds: usize,
    pub pmi_positive_seeds: Vec<String>,
    pub pmi_negative_seeds: Vec<String>,
    /// When false, neutral-labeled synsets neither trigger growth nor
    /// contribute to neighbor sums.
    pub neutral_propagates: bool,
}

impl ExpansionConfig {
    fn with(
        pos_filter: PosFilter,
        kinds: &[RelationKind],
        algorithm: Algorithm,
    ) -> ExpansionConfig {
        ExpansionConfig {
            pos_filter,
            relation_kinds: kinds.iter().copied().collect(),
            algorithm,
            max_rounds: 0,
            pmi_positive_seeds: vec!["good".into()],
            pmi_negative_seeds: vec!["bad".into()],
            neutral_propagates: true,
        }
    }

    /// Case 1: all parts of speech, antonym edges only.
    pub fn case1(algorithm: Algorithm) -> ExpansionConfig {
        Self::with(PosFilter::All, &[RelationKind::Antonym], algorithm)
    }

    /// Case 2: adjectives only, antonym + hyponym + hypernym edges.
    pub fn case2(algorithm: Algorithm) -> ExpansionConfig {
        Self::with(
            PosFilter::AdjectivesOnly,
            &[
                RelationKind::Antonym,
                RelationKind::Hyponym,
                RelationKind::Hypernym,
            ],
            algorithm,
        )
    }

    /// Case 3: adjectives only, antonym edges only.
    pub fn case3(algorithm: Algorithm) -> ExpansionConfig {
        Self::with(PosFilter::AdjectivesOnly, &[RelationKind::Antonym], algorithm)
    }

    pub fn case(case: u8, algorithm: Algorithm) -> Option<ExpansionConfig> {
        match case {
            1 => Some(Self::case1(algorithm)),
            2 => Some(Self::case2(algorithm)),
            3 => Some(Self::case3(algorithm)),
            _ => None,
        }
    }
}

/// How an entry earned its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedSource {
    Hand,
    RelationRule,
    Pmi,
}

impl SeedSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedSource::Hand => "hand",
            SeedSource::RelationRule => "relation-rule",
            SeedSource::Pmi => "pmi",
        }
    }
}

impl std::str::FromStr for SeedSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hand" => Ok(SeedSource::Hand),
            "relation-rule" => Ok(SeedSource::RelationRule),
            "pmi" => Ok(SeedSource::Pmi),
            other => Err(format!("unknown seed source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedEntry {
    pub label: Label,
    pub round: u32,
    pub source: SeedSource,
}

/// Growing map from synset id to label with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledSeed {
    entries: BTreeMap<String, SeedEntry>,
}

/// Identity of one generated training dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub case: u8,
    pub algorithm: Algorithm,
}

/// A named training dataset plus the entries it holds.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub entries: LabeledSeed,
}

impl LabeledSeed {
    pub fn from_hand_labels(labels: impl IntoIterator<Item = (String, Label)>) -> LabeledSeed {
        LabeledSeed {
            entries: labels
                .into_iter()
                .map(|(id, label)| {
                    (
                        id,
                        SeedEntry {
                            label,
                            round: 0,
                            source: SeedSource::Hand,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn insert(&mut self, id: String, entry: SeedEntry) {
        self.entries.insert(id, entry);
    }

    pub fn get(&self, id: &str) -> Option<&SeedEntry> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SeedEntry)> {
        self.entries.iter().map(|(id, e)| (id.as_str(), e))
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.entries
            .iter()
            .map(|(id, e)| (id.clone(), e.label))
            .collect()
    }

    pub fn max_round(&self) -> u32 {
        self.entries.values().map(|e| e.round).max().unwrap_or(0)
    }

    /// TSV `id<TAB>label<TAB>round<TAB>source` with the dataset identity in
    /// leading `#`-comment lines.
    pub fn save(
        &self,
        path: impl AsRef<Path>,
        meta: Option<&DatasetMeta>,
    ) -> Result<(), ExpansionError> {
        let path = path.as_ref();
        let io_err = |source| ExpansionError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = File::create(path).map_err(io_err)?;
        if let Some(meta) = meta {
            writeln!(file, "# dataset: {}", meta.name).map_err(io_err)?;
            writeln!(file, "# case: {}", meta.case).map_err(io_err)?;
            writeln!(file, "# algorithm: {}", meta.algorithm).map_err(io_err)?;
        }
        writeln!(file, "id\tlabel\tround\tsource").map_err(io_err)?;
        for (id, entry) in &self.entries {
            writeln!(
                file,
                "{id}\t{}\t{}\t{}",
                entry.label,
                entry.round,
                entry.source.as_str()
            )
            .map_err(io_err)?;
        }
        Ok(())
    }

    /// Read a dataset file written by `save`.
    pub fn load(
        path: impl AsRef<Path>,
    ) -> Result<(LabeledSeed, Option<DatasetMeta>), ExpansionError> {
        let path = path.as_ref();
        let io_err = |source| ExpansionError::Io {
            path: path.to_path_buf(),
            source,
        };
        let malformed = |line: usize, message: String| ExpansionError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };

        let file = File::open(path).map_err(io_err)?;
        let mut entries = BTreeMap::new();
        let mut name = None;
        let mut case = None;
        let mut algorithm = None;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# dataset:") {
                name = Some(rest.trim().to_string());
                continue;
            }
            if let Some(rest) = line.strip_prefix("# case:") {
                case = rest.trim().parse::<u8>().ok();
                continue;
            }
            if let Some(rest) = line.strip_prefix("# algorithm:") {
                algorithm = rest.trim().parse::<Algorithm>().ok();
                continue;
            }
            if line.starts_with('#') || line.starts_with("id\t") {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 4 {
                return Err(malformed(line_no, "expected id, label, round, source".into()));
            }
            let label: Label = fields[1]
                .parse()
                .map_err(|e: crate::label::ParseLabelError| malformed(line_no, e.to_string()))?;
            let round: u32 = fields[2]
                .parse()
                .map_err(|_| malformed(line_no, format!("invalid round `{}`", fields[2])))?;
            let source: SeedSource = fields[3]
                .parse()
                .map_err(|e: String| malformed(line_no, e))?;
            entries.insert(fields[0].to_string(), SeedEntry { label, round, source });
        }
        let meta = match (name, case, algorithm) {
            (Some(name), Some(case), Some(algorithm)) => Some(DatasetMeta {
                name,
                case,
                algorithm,
            }),
            _ => None,
        };
        Ok((LabeledSeed { entries }, meta))
    }

    /// Read a hand seed: any TSV whose header has `id` and `label` columns
    /// (extra columns ignored). Every row becomes a round-0 hand entry.
    pub fn load_hand_seed(path: impl AsRef<Path>) -> Result<LabeledSeed, ExpansionError> {
        let path = path.as_ref();
        let io_err = |source| ExpansionError::Io {
            path: path.to_path_buf(),
            source,
        };
        let malformed = |line: usize, message: String| ExpansionError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };

        let file = File::open(path).map_err(io_err)?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(io_err)?,
            None => return Ok(LabeledSeed::default()),
        };
        let columns: Vec<&str> = header.split('\t').collect();
        let id_col = columns
            .iter()
            .position(|c| *c == "id")
            .ok_or_else(|| malformed(1, "header has no `id` column".into()))?;
        let label_col = columns
            .iter()
            .position(|c| *c == "label")
            .ok_or_else(|| malformed(1, "header has no `label` column".into()))?;

        let mut labels = BTreeMap::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let id = fields
                .get(id_col)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| malformed(line_no, "missing id".into()))?;
            let label: Label = fields
                .get(label_col)
                .copied()
                .unwrap_or("")
                .parse()
                .map_err(|e: crate::label::ParseLabelError| malformed(line_no, e.to_string()))?;
            labels.insert(id.to_string(), label);
        }
        Ok(LabeledSeed::from_hand_labels(labels))
    }
}

/// Label implied on the far end of a relation: antonymy flips the sign, the
/// other kinds preserve it.
pub fn implied_label(source: Label, kind: RelationKind) -> Label {
    match kind {
        RelationKind::Antonym => source.negated(),
        RelationKind::Synonym | RelationKind::Hypernym | RelationKind::Hyponym => source,
    }
}

/// Pointwise mutual information in bits:
/// `log2(C(a,b) * T / (C(a) * C(b)))` with the joint count summed over both
/// token orders. `None` when any required count is absent or `T` is zero.
pub fn pmi(a: &str, b: &str, counts: &NGramCounts) -> Option<f64> {
    let ca = counts.unigram(a)?;
    let cb = counts.unigram(b)?;
    let cab = counts.bigram_both_orders(a, b)?;
    let total = counts.total_tokens();
    if total == 0 || ca == 0 || cb == 0 || cab == 0 {
        return None;
    }
    Some(((cab as f64 * total as f64) / (ca as f64 * cb as f64)).log2())
}

/// Semantic orientation: PMI with the positive seed terms minus PMI with
/// the negative seed terms. Unavailable if any constituent PMI is.
pub fn so_pmi(
    term: &str,
    positive_seeds: &[String],
    negative_seeds: &[String],
    counts: &NGramCounts,
) -> Option<f64> {
    let mut value = 0.0;
    for seed in positive_seeds {
        value += pmi(term, seed, counts)?;
    }
    for seed in negative_seeds {
        value -= pmi(term, seed, counts)?;
    }
    Some(value)
}

/// Corpus polarity of a synset: each sense with an available orientation
/// contributes its sign (an exact zero contributes nothing), and the synset
/// takes the sign of the sum. Unavailable when no sense has an orientation
/// or the contributions cancel.
pub fn synset_pmi_polarity(
    synset: &Synset,
    config: &ExpansionConfig,
    counts: &NGramCounts,
) -> Option<i64> {
    let mut any_available = false;
    let mut sum = 0i64;
    for sense in &synset.senses {
        if let Some(value) = so_pmi(
            sense,
            &config.pmi_positive_seeds,
            &config.pmi_negative_seeds,
            counts,
        ) {
            any_available = true;
            if value > 0.0 {
                sum += 1;
            } else if value < 0.0 {
                sum -= 1;
            }
        }
    }
    if !any_available || sum == 0 {
        return None;
    }
    Some(sum.signum())
}

/// Symmetrized adjacency restricted to the configured relation kinds:
/// for node `v`, the list of (neighbor index, kind of the edge neighbor->v).
struct Adjacency {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    incoming: Vec<Vec<(usize, RelationKind)>>,
    outgoing: Vec<Vec<usize>>,
}

impl Adjacency {
    fn build(ontology: &Ontology, kinds: &BTreeSet<RelationKind>) -> Adjacency {
        let ids: Vec<String> = ontology.ids().map(str::to_string).collect();
        let index: BTreeMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let mut edges: BTreeSet<(usize, usize, RelationKind)> = BTreeSet::new();
        for synset in ontology.synsets() {
            let u = index[&synset.id];
            for rel in &synset.relations {
                if !kinds.contains(&rel.kind) {
                    continue;
                }
                let v = index[&rel.target];
                edges.insert((u, v, rel.kind));
                edges.insert((v, u, rel.kind.mirrored()));
            }
        }
        let mut incoming = vec![Vec::new(); ids.len()];
        let mut outgoing = vec![Vec::new(); ids.len()];
        for (u, v, kind) in edges {
            incoming[v].push((u, kind));
            outgoing[u].push(v);
        }
        Adjacency {
            ids,
            index,
            incoming,
            outgoing,
        }
    }
}

/// Expand a hand-labeled seed over the ontology per the config. Labeled
/// entries are never relabeled; rounds commit in two phases so the result
/// does not depend on processing order within a round.
pub fn expand(
    ontology: &Ontology,
    seed: &LabeledSeed,
    config: &ExpansionConfig,
    counts: Option<&NGramCounts>,
) -> Result<LabeledSeed, ExpansionError> {
    if config.algorithm == Algorithm::Pmi && counts.is_none() {
        return Err(ExpansionError::CountsRequired);
    }
    for (id, entry) in seed.iter() {
        if entry.round != 0 || entry.source != SeedSource::Hand {
            return Err(ExpansionError::NotAHandSeed {
                id: id.to_string(),
                round: entry.round,
            });
        }
        if !ontology.contains(id) {
            return Err(ExpansionError::UnknownSeed { id: id.to_string() });
        }
    }

    let adjacency = Adjacency::build(ontology, &config.relation_kinds);
    let mut result = seed.clone();

    // Labels already committed, indexed densely; source nodes are the ones
    // allowed to propagate (all labeled nodes, or only signed ones).
    let mut committed: Vec<Option<Label>> = vec![None; adjacency.ids.len()];
    let is_source = |label: Label, config: &ExpansionConfig| {
        config.neutral_propagates || label != Label::Neutral
    };

    let mut frontier: BTreeSet<usize> = BTreeSet::new();
    for (id, entry) in seed.iter() {
        let idx = adjacency.index[id];
        committed[idx] = Some(entry.label);
        if is_source(entry.label, config) {
            frontier.insert(idx);
        }
    }

    let mut round: u32 = 0;
    while !frontier.is_empty() {
        if config.max_rounds > 0 && round as usize >= config.max_rounds {
            break;
        }
        round += 1;

        // Candidates: unlabeled neighbors of the frontier passing the POS
        // filter. BTreeSet keeps the processing order id-sorted.
        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        for &u in &frontier {
            for &v in &adjacency.outgoing[u] {
                if committed[v].is_some() {
                    continue;
                }
                let pos = ontology
                    .get(&adjacency.ids[v])
                    .expect("adjacency ids come from the ontology")
                    .pos;
                if config.pos_filter.admits(pos) {
                    candidates.insert(v);
                }
            }
        }

        // Phase 1: compute labels against the committed state only.
        let mut assignments: Vec<(usize, Label, SeedSource)> = Vec::new();
        for &v in &candidates {
            let mut sum = 0i64;
            let mut any_source = false;
            for &(u, kind) in &adjacency.incoming[v] {
                if let Some(label) = committed[u] {
                    if !is_source(label, config) {
                        continue;
                    }
                    any_source = true;
                    sum += implied_label(label, kind).signed();
                }
            }
            if !any_source {
                continue;
            }
            let rule_label = Label::from_sign(sum);

            let (label, source) = if config.algorithm == Algorithm::Pmi && round >= 2 {
                let synset = ontology.get(&adjacency.ids[v]).expect("known id");
                match synset_pmi_polarity(synset, config, counts.expect("checked above")) {
                    Some(sign) => (Label::from_sign(sign), SeedSource::Pmi),
                    None => (rule_label, SeedSource::RelationRule),
                }
            } else {
                (rule_label, SeedSource::RelationRule)
            };
            assignments.push((v, label, source));
        }

        if assignments.is_empty() {
            break;
        }

        // Phase 2: commit.
        frontier.clear();
        for (v, label, source) in assignments {
            committed[v] = Some(label);
            result.insert(
                adjacency.ids[v].clone(),
                SeedEntry {
                    label,
                    round,
                    source,
                },
            );
            if is_source(label, config) {
                frontier.insert(v);
            }
        }
    }

    Ok(result)
}

/// Generate the six training datasets: cases 1..3 crossed with the default
/// and PMI algorithms, named Data-1 through Data-6.
pub fn generate_training_matrix(
    ontology: &Ontology,
    seed: &LabeledSeed,
    counts: &NGramCounts,
    base: &ExpansionConfig,
) -> Result<Vec<Dataset>, ExpansionError> {
    let mut datasets = Vec::with_capacity(6);
    let mut number = 0u8;
    for case in 1..=3u8 {
        for algorithm in [Algorithm::Default, Algorithm::Pmi] {
            number += 1;
            let mut config = ExpansionConfig::case(case, algorithm).expect("cases 1..3");
            config.max_rounds = base.max_rounds;
            config.pmi_positive_seeds = base.pmi_positive_seeds.clone();
            config.pmi_negative_seeds = base.pmi_negative_seeds.clone();
            config.neutral_propagates = base.neutral_propagates;
            let entries = expand(ontology, seed, &config, Some(counts))?;
            datasets.push(Dataset {
                meta: DatasetMeta {
                    name: format!("Data-{number}"),
                    case,
                    algorithm,
                },
                entries,
            });
        }
    }
    Ok(datasets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Relation;
    use std::collections::HashMap;

    fn adjective(id: &str, senses: &[&str], relations: &[(RelationKind, &str)]) -> Synset {
        make_synset(id, PartOfSpeech::Adjective, senses, relations)
    }

    fn make_synset(
        id: &str,
        pos: PartOfSpeech,
        senses: &[&str],
        relations: &[(RelationKind, &str)],
    ) -> Synset {
        Synset {
            id: id.into(),
            pos,
            senses: senses.iter().map(|s| s.to_string()).collect(),
            gloss: String::new(),
            examples: vec![],
            relations: relations
                .iter()
                .map(|(kind, target)| Relation {
                    kind: *kind,
                    target: target.to_string(),
                })
                .collect(),
        }
    }

    fn counts_from(
        unigrams: &[(&str, u64)],
        bigrams: &[(&str, &str, u64)],
        total: u64,
    ) -> NGramCounts {
        NGramCounts::from_parts(
            unigrams
                .iter()
                .map(|(t, c)| (t.to_string(), *c))
                .collect::<HashMap<_, _>>(),
            bigrams
                .iter()
                .map(|(a, b, c)| ((a.to_string(), b.to_string()), *c))
                .collect::<HashMap<_, _>>(),
            total,
        )
        .unwrap()
    }

    #[test]
    fn implied_label_matches_relation_semantics() {
        assert_eq!(
            implied_label(Label::Positive, RelationKind::Antonym),
            Label::Negative
        );
        assert_eq!(
            implied_label(Label::Neutral, RelationKind::Antonym),
            Label::Neutral
        );
        assert_eq!(
            implied_label(Label::Negative, RelationKind::Hypernym),
            Label::Negative
        );
        assert_eq!(
            implied_label(Label::Positive, RelationKind::Synonym),
            Label::Positive
        );
        assert_eq!(
            implied_label(Label::Negative, RelationKind::Hyponym),
            Label::Negative
        );
    }

    #[test]
    fn pmi_matches_hand_computed_value() {
        // C(t)=10, C(good)=20, C(t,good)=4, T=1000 -> log2(20).
        let counts = counts_from(&[("t", 10), ("good", 20)], &[("t", "good", 4)], 1000);
        let value = pmi("t", "good", &counts).unwrap();
        assert!((value - 20f64.log2()).abs() < 1e-9);
        assert!((value - 4.321928094887363).abs() < 1e-9);
    }

    #[test]
    fn pmi_unavailable_without_joint_count() {
        let counts = counts_from(&[("a", 10), ("b", 10)], &[], 100);
        assert_eq!(pmi("a", "b", &counts), None);
    }

    #[test]
    fn pmi_zero_when_ratio_is_one() {
        // C(a)=C(b)=10, joint=1, T=100 -> ratio 1 -> PMI 0.
        let counts = counts_from(&[("a", 10), ("b", 10)], &[("a", "b", 1)], 100);
        assert_eq!(pmi("a", "b", &counts), Some(0.0));
    }

    #[test]
    fn so_pmi_subtracts_negative_reference() {
        let counts = counts_from(
            &[("t", 10), ("good", 20), ("bad", 20)],
            &[("t", "good", 4), ("t", "bad", 4)],
            1000,
        );
        // Symmetric counts -> zero orientation.
        assert_eq!(
            so_pmi("t", &["good".into()], &["bad".into()], &counts),
            Some(0.0)
        );

        let skewed = counts_from(
            &[("t", 10), ("good", 20), ("bad", 100)],
            &[("t", "good", 4), ("t", "bad", 2)],
            1000,
        );
        let value = so_pmi("t", &["good".into()], &["bad".into()], &skewed).unwrap();
        let expected = 20f64.log2() - 2f64.log2();
        assert!((value - expected).abs() < 1e-9);
    }

    #[test]
    fn so_pmi_unavailable_if_any_constituent_is() {
        let counts = counts_from(
            &[("t", 10), ("good", 20), ("bad", 20)],
            &[("t", "good", 4)],
            1000,
        );
        assert_eq!(so_pmi("t", &["good".into()], &["bad".into()], &counts), None);
    }

    fn pmi_config(algorithm: Algorithm) -> ExpansionConfig {
        ExpansionConfig::case1(algorithm)
    }

    #[test]
    fn synset_polarity_is_sign_of_sense_sign_sum() {
        // Senses with orientations {+, +, -} -> sum +1 -> positive.
        let counts = counts_from(
            &[("p1", 10), ("p2", 10), ("m1", 10), ("good", 10), ("bad", 10)],
            &[
                ("p1", "good", 8),
                ("p1", "bad", 1),
                ("p2", "good", 4),
                ("p2", "bad", 1),
                ("m1", "good", 1),
                ("m1", "bad", 8),
            ],
            1000,
        );
        let synset = adjective("x", &["p1", "p2", "m1"], &[]);
        assert_eq!(
            synset_pmi_polarity(&synset, &pmi_config(Algorithm::Pmi), &counts),
            Some(1)
        );
    }

    #[test]
    fn synset_polarity_unavailable_when_no_sense_has_counts() {
        let counts = counts_from(&[("good", 10), ("bad", 10)], &[], 100);
        let synset = adjective("x", &["unseen"], &[]);
        assert_eq!(
            synset_pmi_polarity(&synset, &pmi_config(Algorithm::Pmi), &counts),
            None
        );
    }

    #[test]
    fn synset_polarity_unavailable_on_tie() {
        let counts = counts_from(
            &[("p", 10), ("m", 10), ("good", 10), ("bad", 10)],
            &[
                ("p", "good", 8),
                ("p", "bad", 1),
                ("m", "good", 1),
                ("m", "bad", 8),
            ],
            1000,
        );
        let synset = adjective("x", &["p", "m"], &[]);
        assert_eq!(
            synset_pmi_polarity(&synset, &pmi_config(Algorithm::Pmi), &counts),
            None
        );
    }

    fn chain_ontology() -> Ontology {
        // A -antonym- B -antonym- C
        Ontology::from_synsets([
            adjective("a", &["a"], &[(RelationKind::Antonym, "b")]),
            adjective("b", &["b"], &[(RelationKind::Antonym, "c")]),
            adjective("c", &["c"], &[]),
        ])
        .unwrap()
    }

    #[test]
    fn default_expansion_alternates_along_antonym_chain() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        let config = ExpansionConfig::case1(Algorithm::Default);
        let result = expand(&ontology, &seed, &config, None).unwrap();

        let b = result.get("b").unwrap();
        assert_eq!((b.label, b.round, b.source), (Label::Negative, 1, SeedSource::RelationRule));
        let c = result.get("c").unwrap();
        assert_eq!((c.label, c.round, c.source), (Label::Positive, 2, SeedSource::RelationRule));
    }

    #[test]
    fn adjectives_only_filter_blocks_noun_growth() {
        let ontology = Ontology::from_synsets([
            adjective("adj.x", &["x"], &[(RelationKind::Antonym, "noun.y")]),
            make_synset("noun.y", PartOfSpeech::Noun, &["y"], &[]),
        ])
        .unwrap();
        let seed = LabeledSeed::from_hand_labels([("adj.x".to_string(), Label::Positive)]);
        let config = ExpansionConfig::case3(Algorithm::Default);
        let result = expand(&ontology, &seed, &config, None).unwrap();
        assert!(!result.contains("noun.y"));
        assert_eq!(result.len(), 1);
    }

    #[test]
    fn empty_seed_expands_to_itself() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::default();
        let config = ExpansionConfig::case1(Algorithm::Default);
        let result = expand(&ontology, &seed, &config, None).unwrap();
        assert!(result.is_empty());
    }

    #[test]
    fn pmi_requires_counts() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        let config = ExpansionConfig::case1(Algorithm::Pmi);
        assert!(matches!(
            expand(&ontology, &seed, &config, None),
            Err(ExpansionError::CountsRequired)
        ));
    }

    #[test]
    fn pmi_never_applies_at_round_one() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        // Counts that would flip b positive if PMI were consulted at round 1.
        let counts = counts_from(
            &[("b", 10), ("good", 10), ("bad", 10)],
            &[("b", "good", 9), ("b", "bad", 1)],
            1000,
        );
        let config = ExpansionConfig::case1(Algorithm::Pmi);
        let result = expand(&ontology, &seed, &config, Some(&counts)).unwrap();
        let b = result.get("b").unwrap();
        assert_eq!(b.label, Label::Negative);
        assert_eq!(b.source, SeedSource::RelationRule);
    }

    #[test]
    fn pmi_overrides_rule_from_round_two() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        // Rule would make c positive at round 2; counts say negative.
        let counts = counts_from(
            &[("c", 10), ("good", 10), ("bad", 10)],
            &[("c", "good", 1), ("c", "bad", 9)],
            1000,
        );
        let config = ExpansionConfig::case1(Algorithm::Pmi);
        let result = expand(&ontology, &seed, &config, Some(&counts)).unwrap();
        let c = result.get("c").unwrap();
        assert_eq!(c.label, Label::Negative);
        assert_eq!(c.source, SeedSource::Pmi);
    }

    #[test]
    fn pmi_falls_back_to_rule_when_unavailable() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        let counts = counts_from(&[("good", 10), ("bad", 10)], &[], 1000);
        let config = ExpansionConfig::case1(Algorithm::Pmi);
        let result = expand(&ontology, &seed, &config, Some(&counts)).unwrap();
        let c = result.get("c").unwrap();
        assert_eq!(c.label, Label::Positive);
        assert_eq!(c.source, SeedSource::RelationRule);
    }

    #[test]
    fn conflicting_neighbors_resolve_by_signed_sum() {
        // x has a positive synonym neighbor and a positive antonym neighbor:
        // +1 + -1 = 0 -> neutral.
        let ontology = Ontology::from_synsets([
            adjective("p1", &["p1"], &[(RelationKind::Synonym, "x")]),
            adjective("p2", &["p2"], &[(RelationKind::Antonym, "x")]),
            adjective("x", &["x"], &[]),
        ])
        .unwrap();
        let seed = LabeledSeed::from_hand_labels([
            ("p1".to_string(), Label::Positive),
            ("p2".to_string(), Label::Positive),
        ]);
        let mut config = ExpansionConfig::case1(Algorithm::Default);
        config.relation_kinds.insert(RelationKind::Synonym);
        let result = expand(&ontology, &seed, &config, None).unwrap();
        assert_eq!(result.get("x").unwrap().label, Label::Neutral);
    }

    #[test]
    fn neutral_seeds_propagate_neutral_by_default() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Neutral)]);
        let config = ExpansionConfig::case1(Algorithm::Default);
        let result = expand(&ontology, &seed, &config, None).unwrap();
        assert_eq!(result.get("b").unwrap().label, Label::Neutral);
        assert_eq!(result.get("c").unwrap().label, Label::Neutral);
    }

    #[test]
    fn neutral_propagation_can_be_disabled() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Neutral)]);
        let mut config = ExpansionConfig::case1(Algorithm::Default);
        config.neutral_propagates = false;
        let result = expand(&ontology, &seed, &config, None).unwrap();
        assert_eq!(result.len(), 1);
    }

    #[test]
    fn max_rounds_limits_the_radius() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        let mut config = ExpansionConfig::case1(Algorithm::Default);
        config.max_rounds = 1;
        let result = expand(&ontology, &seed, &config, None).unwrap();
        assert!(result.contains("b"));
        assert!(!result.contains("c"));
    }

    #[test]
    fn expansion_is_deterministic() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        let config = ExpansionConfig::case1(Algorithm::Default);
        let first = expand(&ontology, &seed, &config, None).unwrap();
        let second = expand(&ontology, &seed, &config, None).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn rejects_non_hand_seed_entries() {
        let ontology = chain_ontology();
        let mut seed = LabeledSeed::default();
        seed.insert(
            "a".to_string(),
            SeedEntry {
                label: Label::Positive,
                round: 1,
                source: SeedSource::RelationRule,
            },
        );
        let config = ExpansionConfig::case1(Algorithm::Default);
        assert!(matches!(
            expand(&ontology, &seed, &config, None),
            Err(ExpansionError::NotAHandSeed { .. })
        ));
    }

    /// Brute-force oracle: recompute the frontier sums from scratch every
    /// round using only the committed label map.
    fn expand_oracle(
        ontology: &Ontology,
        seed: &LabeledSeed,
        config: &ExpansionConfig,
    ) -> BTreeMap<String, Label> {
        let mut labels: BTreeMap<String, Label> = seed.labels();
        loop {
            let mut additions: BTreeMap<String, Label> = BTreeMap::new();
            for synset in ontology.synsets() {
                if labels.contains_key(&synset.id) || !config.pos_filter.admits(synset.pos) {
                    continue;
                }
                // Gather labeled neighbors over symmetrized edges. A
                // relation stored in both directions is one edge, so dedup
                // (neighbor, kind) pairs like the implementation does.
                let mut incident: BTreeSet<(String, RelationKind)> = BTreeSet::new();
                for other in ontology.synsets() {
                    for rel in &other.relations {
                        if !config.relation_kinds.contains(&rel.kind) {
                            continue;
                        }
                        if other.id == synset.id {
                            incident.insert((rel.target.clone(), rel.kind.mirrored()));
                        } else if rel.target == synset.id {
                            incident.insert((other.id.clone(), rel.kind));
                        }
                    }
                }
                let mut sum = 0i64;
                let mut any = false;
                for (neighbor, kind) in incident {
                    if let Some(&label) = labels.get(&neighbor) {
                        if !config.neutral_propagates && label == Label::Neutral {
                            continue;
                        }
                        any = true;
                        sum += implied_label(label, kind).signed();
                    }
                }
                if any {
                    additions.insert(synset.id.clone(), Label::from_sign(sum));
                }
            }
            if additions.is_empty() {
                return labels;
            }
            labels.extend(additions);
        }
    }

    #[test]
    fn default_expansion_matches_bruteforce_oracle_on_random_ontologies() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.random_range(2..=12);
            let ids: Vec<String> = (0..n).map(|i| format!("s{i:02}")).collect();
            let synsets: Vec<Synset> = (0..n)
                .map(|i| {
                    let rel_count = rng.random_range(0..3);
                    let relations: Vec<(RelationKind, String)> = (0..rel_count)
                        .map(|_| {
                            let kind = match rng.random_range(0..4) {
                                0 => RelationKind::Antonym,
                                1 => RelationKind::Synonym,
                                2 => RelationKind::Hypernym,
                                _ => RelationKind::Hyponym,
                            };
                            (kind, ids[rng.random_range(0..n)].clone())
                        })
                        .filter(|(_, t)| *t != ids[i])
                        .collect();
                    let pos = if rng.random_range(0..4) == 0 {
                        PartOfSpeech::Noun
                    } else {
                        PartOfSpeech::Adjective
                    };
                    make_synset(
                        &ids[i],
                        pos,
                        &["w"],
                        &relations
                            .iter()
                            .map(|(k, t)| (*k, t.as_str()))
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            let ontology = Ontology::from_synsets(synsets).unwrap();

            let mut hand = BTreeMap::new();
            for id in ids.iter().take(rng.random_range(1..=n)) {
                let label = match rng.random_range(0..3) {
                    0 => Label::Negative,
                    1 => Label::Neutral,
                    _ => Label::Positive,
                };
                hand.insert(id.clone(), label);
            }
            let seed = LabeledSeed::from_hand_labels(hand);

            let mut config = ExpansionConfig::case1(Algorithm::Default);
            config.relation_kinds = RelationKind::ALL.iter().copied().collect();
            if rng.random_range(0..2) == 0 {
                config.pos_filter = PosFilter::AdjectivesOnly;
            }

            let fast = expand(&ontology, &seed, &config, None).unwrap();
            let oracle = expand_oracle(&ontology, &seed, &config);
            assert_eq!(fast.labels(), oracle);
        }
    }

    #[test]
    fn training_matrix_names_and_inclusions() {
        // bad(-) seed; good grows by antonym; wicked by hyponym (case 2 only);
        // noun.v grows only in case 1.
        let ontology = Ontology::from_synsets([
            adjective("adj.bad", &["bad"], &[(RelationKind::Antonym, "adj.good")]),
            adjective("adj.good", &["good"], &[(RelationKind::Hyponym, "adj.superb")]),
            adjective("adj.superb", &["superb"], &[]),
            make_synset(
                "noun.v",
                PartOfSpeech::Noun,
                &["v"],
                &[(RelationKind::Antonym, "adj.bad")],
            ),
        ])
        .unwrap();
        let seed = LabeledSeed::from_hand_labels([("adj.bad".to_string(), Label::Negative)]);
        let counts = counts_from(&[("good", 10), ("bad", 10)], &[], 100);
        let base = ExpansionConfig::case1(Algorithm::Default);
        let datasets = generate_training_matrix(&ontology, &seed, &counts, &base).unwrap();

        assert_eq!(datasets.len(), 6);
        let names: Vec<&str> = datasets.iter().map(|d| d.meta.name.as_str()).collect();
        assert_eq!(names, ["Data-1", "Data-2", "Data-3", "Data-4", "Data-5", "Data-6"]);
        assert_eq!(datasets[2].meta.case, 2);
        assert_eq!(datasets[3].meta.algorithm, Algorithm::Pmi);

        let ids = |i: usize| datasets[i].entries.ids();
        // Data-1 and Data-2 agree everywhere here (all growth is round 1-2
        // and PMI is unavailable).
        assert_eq!(datasets[0].entries, datasets[1].entries);
        // Case 3 uses a subset of case 2's relations.
        assert!(ids(4).is_subset(&ids(2)));
        // Case 2 reaches the hyponym, case 3 does not.
        assert!(ids(2).contains("adj.superb"));
        assert!(!ids(4).contains("adj.superb"));
        // Only case 1 labels the noun.
        assert!(ids(0).contains("noun.v"));
        assert!(!ids(2).contains("noun.v"));
    }

    #[test]
    fn matrix_with_noun_only_seed_and_case3_stays_at_seed() {
        let ontology = Ontology::from_synsets([
            make_synset(
                "noun.a",
                PartOfSpeech::Noun,
                &["a"],
                &[(RelationKind::Antonym, "noun.b")],
            ),
            make_synset("noun.b", PartOfSpeech::Noun, &["b"], &[]),
        ])
        .unwrap();
        let seed = LabeledSeed::from_hand_labels([("noun.a".to_string(), Label::Positive)]);
        let counts = counts_from(&[], &[], 0);
        let base = ExpansionConfig::case1(Algorithm::Default);
        let datasets = generate_training_matrix(&ontology, &seed, &counts, &base).unwrap();
        let data5 = &datasets[4];
        assert_eq!(data5.meta.name, "Data-5");
        assert_eq!(data5.entries.ids(), seed.ids());
    }

    #[test]
    fn dataset_file_round_trip() {
        let ontology = chain_ontology();
        let seed = LabeledSeed::from_hand_labels([("a".to_string(), Label::Positive)]);
        let config = ExpansionConfig::case1(Algorithm::Default);
        let expanded = expand(&ontology, &seed, &config, None).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("Data-1.tsv");
        let meta = DatasetMeta {
            name: "Data-1".into(),
            case: 1,
            algorithm: Algorithm::Default,
        };
        expanded.save(&path, Some(&meta)).unwrap();
        let (loaded, loaded_meta) = LabeledSeed::load(&path).unwrap();
        assert_eq!(loaded, expanded);
        assert_eq!(loaded_meta.unwrap(), meta);
    }

    #[test]
    fn hand_seed_loader_accepts_gold_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gold.tsv");
        std::fs::write(&path, "id\tlabel\tprovenance\nx\tpositive\tagreed\n").unwrap();
        let seed = LabeledSeed::load_hand_seed(&path).unwrap();
        let entry = seed.get("x").unwrap();
        assert_eq!(entry.label, Label::Positive);
        assert_eq!(entry.round, 0);
        assert_eq!(entry.source, SeedSource::Hand);
    }
}
