//! Annotation sheets, inter-annotator agreement, and adjudication.
//!
//! Seeds go out as TSV sheets, come back with a filled label column, and are
//! merged into a gold standard. Agreement is measured with Fleiss' kappa
//! over the three sentiment categories.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::label::Label;
use crate::ontology::Ontology;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Sheet {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("seed id `{id}` does not exist in the ontology")]
    UnknownSeed { id: String },
    #[error("annotation sheets disagree on the item universe: {details}")]
    UniverseMismatch { details: String },
    #[error("fewer than 2 annotators ({0} given)")]
    TooFewAnnotators(usize),
    #[error("annotation set has no items")]
    NoItems,
    #[error("tiebreaker is missing labels for disagreed items: {}", ids.join(", "))]
    MissingTiebreak { ids: Vec<String> },
}

pub const SHEET_HEADER: &str = "id\tpos\tsenses\tgloss\tlabel";

fn sanitize(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Write a TSV sheet for the given seed ids; the label column is empty.
/// Returns the data row count.
pub fn export_sheet(
    seeds: &[String],
    ontology: &Ontology,
    path: impl AsRef<Path>,
) -> Result<usize, AnnotationError> {
    let path = path.as_ref();
    let io_err = |source| AnnotationError::Io {
        path: path.to_path_buf(),
        source,
    };

    let mut rows = Vec::with_capacity(seeds.len());
    for id in seeds {
        let synset = ontology
            .get(id)
            .ok_or_else(|| AnnotationError::UnknownSeed { id: id.clone() })?;
        rows.push(format!(
            "{}\t{}\t{}\t{}\t",
            synset.id,
            synset.pos,
            sanitize(&synset.senses.join(" ")),
            sanitize(&synset.gloss),
        ));
    }

    let mut file = File::create(path).map_err(io_err)?;
    writeln!(file, "{SHEET_HEADER}").map_err(io_err)?;
    for row in &rows {
        writeln!(file, "{row}").map_err(io_err)?;
    }
    Ok(rows.len())
}

fn parse_sheet_rows(
    path: &Path,
    allow_empty_labels: bool,
) -> Result<Vec<(String, Option<Label>)>, AnnotationError> {
    let io_err = |source| AnnotationError::Io {
        path: path.to_path_buf(),
        source,
    };
    let sheet_err = |line: usize, message: String| AnnotationError::Sheet {
        path: path.to_path_buf(),
        line,
        message,
    };

    let file = File::open(path).map_err(io_err)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| sheet_err(1, "empty sheet (missing header)".into()))?;
    let header = header.map_err(io_err)?;
    let columns: Vec<&str> = header.split('\t').collect();
    let id_col = columns
        .iter()
        .position(|c| *c == "id")
        .ok_or_else(|| sheet_err(1, "header has no `id` column".into()))?;
    let label_col = columns
        .iter()
        .position(|c| *c == "label")
        .ok_or_else(|| sheet_err(1, "header has no `label` column".into()))?;

    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let id = fields
            .get(id_col)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| sheet_err(line_no, "missing id".into()))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(sheet_err(line_no, format!("duplicate id `{id}`")));
        }
        let raw_label = fields.get(label_col).copied().unwrap_or("").trim();
        let label = if raw_label.is_empty() {
            if allow_empty_labels {
                None
            } else {
                return Err(sheet_err(line_no, format!("missing label for `{id}`")));
            }
        } else {
            Some(raw_label.parse::<Label>().map_err(|e| {
                sheet_err(line_no, e.to_string())
            })?)
        };
        rows.push((id, label));
    }
    Ok(rows)
}

/// Read a fully labeled sheet: every row must carry a valid label.
pub fn load_labeled_sheet(
    path: impl AsRef<Path>,
) -> Result<Vec<(String, Label)>, AnnotationError> {
    Ok(parse_sheet_rows(path.as_ref(), false)?
        .into_iter()
        .map(|(id, label)| (id, label.expect("labels required")))
        .collect())
}

/// Read a tiebreak sheet: rows with an empty label are skipped.
pub fn load_tiebreak_sheet(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, Label>, AnnotationError> {
    Ok(parse_sheet_rows(path.as_ref(), true)?
        .into_iter()
        .filter_map(|(id, label)| label.map(|l| (id, l)))
        .collect())
}

/// Labels from several annotators over one shared item universe.
#[derive(Debug, Clone)]
pub struct AnnotationSet {
    annotators: Vec<(String, BTreeMap<String, Label>)>,
    universe: Vec<String>,
}

/// One labeled sheet per annotator; all sheets must cover the same ids.
pub fn import_annotations(paths: &[PathBuf]) -> Result<AnnotationSet, AnnotationError> {
    let mut named = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let rows = load_labeled_sheet(path)?;
        named.push((name, rows));
    }
    AnnotationSet::from_sheets(named)
}

impl AnnotationSet {
    /// Build from (annotator name, rows) pairs. The first annotator's row
    /// order defines the item universe; later annotators may order rows
    /// differently but must cover the same id set.
    pub fn from_sheets(
        sheets: Vec<(String, Vec<(String, Label)>)>,
    ) -> Result<Self, AnnotationError> {
        if sheets.len() < 2 {
            return Err(AnnotationError::TooFewAnnotators(sheets.len()));
        }
        let universe: Vec<String> = sheets[0].1.iter().map(|(id, _)| id.clone()).collect();
        let universe_set: BTreeSet<&String> = universe.iter().collect();
        let mut annotators = Vec::with_capacity(sheets.len());
        for (name, rows) in &sheets {
            let ids: BTreeSet<&String> = rows.iter().map(|(id, _)| id).collect();
            if ids != universe_set {
                let missing: Vec<String> = universe_set
                    .difference(&ids)
                    .map(|s| s.to_string())
                    .collect();
                let extra: Vec<String> = ids
                    .difference(&universe_set)
                    .map(|s| s.to_string())
                    .collect();
                return Err(AnnotationError::UniverseMismatch {
                    details: format!(
                        "annotator `{name}` is missing [{}] and adds [{}]",
                        missing.join(", "),
                        extra.join(", ")
                    ),
                });
            }
            annotators.push((name.clone(), rows.iter().cloned().collect()));
        }
        Ok(AnnotationSet {
            annotators,
            universe,
        })
    }

    pub fn annotator_count(&self) -> usize {
        self.annotators.len()
    }

    pub fn item_count(&self) -> usize {
        self.universe.len()
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn annotators(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, Label>)> {
        self.annotators.iter().map(|(n, m)| (n.as_str(), m))
    }

    fn item_labels(&self, id: &str) -> Vec<Label> {
        self.annotators
            .iter()
            .map(|(_, labels)| labels[id])
            .collect()
    }

    /// Items on which the annotators are not unanimous, in universe order.
    pub fn disagreements(&self) -> Vec<String> {
        self.universe
            .iter()
            .filter(|id| {
                let labels = self.item_labels(id);
                labels.iter().any(|&l| l != labels[0])
            })
            .cloned()
            .collect()
    }

    /// Fleiss' kappa over the three sentiment categories.
    ///
    /// kappa = (Pbar - Pe) / (1 - Pe), with per-item agreement
    /// P_i = (sum_j n_ij^2 - n) / (n (n - 1)) and chance agreement
    /// Pe = sum_j p_j^2. Computed with exact integer arithmetic so the
    /// result is invariant under annotator and item permutations, and
    /// special-cased to exactly 1.0 under perfect agreement.
    pub fn fleiss_kappa(&self) -> Result<f64, AnnotationError> {
        let raters = self.annotators.len();
        let items = self.universe.len();
        if raters < 2 {
            return Err(AnnotationError::TooFewAnnotators(raters));
        }
        if items == 0 {
            return Err(AnnotationError::NoItems);
        }

        let mut unanimous = true;
        let mut sum_sq = 0i128; // sum over items of sum_j n_ij^2
        let mut category_totals = [0i128; 3];
        for id in &self.universe {
            let labels = self.item_labels(id);
            let mut counts = [0i128; 3];
            for label in &labels {
                counts[label.index()] += 1;
            }
            if labels.iter().any(|&l| l != labels[0]) {
                unanimous = false;
            }
            for (j, &c) in counts.iter().enumerate() {
                sum_sq += c * c;
                category_totals[j] += c;
            }
        }
        if unanimous {
            return Ok(1.0);
        }

        let n = raters as i128;
        let items = items as i128;
        // Pbar = a / b, Pe = c / d; all exact integers.
        let a = sum_sq - items * n;
        let b = items * n * (n - 1);
        let c: i128 = category_totals.iter().map(|&t| t * t).sum();
        let d = (items * n) * (items * n);
        // kappa = (a/b - c/d) / (1 - c/d) = (a d - b c) / (b (d - c)).
        let numerator = a * d - b * c;
        let denominator = b * (d - c);
        Ok(numerator as f64 / denominator as f64)
    }

    /// Merge into a gold standard: unanimous items keep their label,
    /// disagreed items take the tiebreaker's label.
    pub fn adjudicate(
        &self,
        tiebreaker: &BTreeMap<String, Label>,
    ) -> Result<Adjudication, AnnotationError> {
        let disagreed: BTreeSet<String> = self.disagreements().into_iter().collect();
        let missing: Vec<String> = disagreed
            .iter()
            .filter(|id| !tiebreaker.contains_key(*id))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(AnnotationError::MissingTiebreak { ids: missing });
        }

        let mut warnings = Vec::new();
        for id in tiebreaker.keys() {
            if !disagreed.contains(id) {
                warnings.push(format!(
                    "tiebreaker covers `{id}` which the annotators agree on; ignored"
                ));
            }
        }

        let mut entries = BTreeMap::new();
        for id in &self.universe {
            let entry = if disagreed.contains(id) {
                GoldEntry {
                    label: tiebreaker[id],
                    provenance: Provenance::Adjudicated,
                }
            } else {
                GoldEntry {
                    label: self.annotators[0].1[id],
                    provenance: Provenance::Agreed,
                }
            };
            entries.insert(id.clone(), entry);
        }
        Ok(Adjudication {
            gold: GoldStandard { entries },
            warnings,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Agreed,
    Adjudicated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Agreed => "agreed",
            Provenance::Adjudicated => "adjudicated",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "agreed" => Ok(Provenance::Agreed),
            "adjudicated" => Ok(Provenance::Adjudicated),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoldEntry {
    pub label: Label,
    pub provenance: Provenance,
}

/// Adjudicated labels over the full item universe.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoldStandard {
    entries: BTreeMap<String, GoldEntry>,
}

#[derive(Debug, Clone)]
pub struct Adjudication {
    pub gold: GoldStandard,
    pub warnings: Vec<String>,
}

impl GoldStandard {
    pub fn from_entries(entries: BTreeMap<String, GoldEntry>) -> Self {
        GoldStandard { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&GoldEntry> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GoldEntry)> {
        self.entries.iter().map(|(id, e)| (id.as_str(), e))
    }

    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.entries
            .iter()
            .map(|(id, e)| (id.clone(), e.label))
            .collect()
    }

    pub fn adjudicated_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| e.provenance == Provenance::Adjudicated)
            .count()
    }

    /// TSV `id<TAB>label<TAB>provenance`, id-sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AnnotationError> {
        let path = path.as_ref();
        let io_err = |source| AnnotationError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = File::create(path).map_err(io_err)?;
        writeln!(file, "id\tlabel\tprovenance").map_err(io_err)?;
        for (id, entry) in &self.entries {
            writeln!(file, "{id}\t{}\t{}", entry.label, entry.provenance.as_str())
                .map_err(io_err)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref();
        let io_err = |source| AnnotationError::Io {
            path: path.to_path_buf(),
            source,
        };
        let sheet_err = |line: usize, message: String| AnnotationError::Sheet {
            path: path.to_path_buf(),
            line,
            message,
        };
        let file = File::open(path).map_err(io_err)?;
        let mut entries = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() || (line_no == 1 && line.starts_with("id\t")) {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(sheet_err(line_no, "expected id, label, provenance".into()));
            }
            let label: Label = fields[1]
                .parse()
                .map_err(|e: crate::label::ParseLabelError| sheet_err(line_no, e.to_string()))?;
            let provenance: Provenance = fields[2]
                .parse()
                .map_err(|e: String| sheet_err(line_no, e))?;
            entries.insert(fields[0].to_string(), GoldEntry { label, provenance });
        }
        Ok(GoldStandard { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{PartOfSpeech, Synset};

    fn tiny_ontology() -> Ontology {
        let make = |id: &str, sense: &str| Synset {
            id: id.into(),
            pos: PartOfSpeech::Adjective,
            senses: vec![sense.into()],
            gloss: format!("gloss of {sense}"),
            examples: vec![],
            relations: vec![],
        };
        Ontology::from_synsets([make("s1", "one"), make("s2", "two"), make("s3", "three")])
            .unwrap()
    }

    fn set_from(rows: &[(&str, &[(&str, &str)])]) -> AnnotationSet {
        let sheets = rows
            .iter()
            .map(|(name, labels)| {
                (
                    name.to_string(),
                    labels
                        .iter()
                        .map(|(id, l)| (id.to_string(), l.parse::<Label>().unwrap()))
                        .collect(),
                )
            })
            .collect();
        AnnotationSet::from_sheets(sheets).unwrap()
    }

    #[test]
    fn export_writes_one_row_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sheet.tsv");
        let ontology = tiny_ontology();
        let n = export_sheet(&["s1".into(), "s2".into()], &ontology, &path).unwrap();
        assert_eq!(n, 2);
        let body = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], SHEET_HEADER);
        assert!(lines[1].starts_with("s1\tadjective\tone\t"));
    }

    #[test]
    fn export_empty_seed_list_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sheet.tsv");
        let n = export_sheet(&[], &tiny_ontology(), &path).unwrap();
        assert_eq!(n, 0);
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body.lines().count(), 1);
    }

    #[test]
    fn export_rejects_unknown_seed() {
        let dir = tempfile::tempdir().unwrap();
        let err = export_sheet(
            &["nope".into()],
            &tiny_ontology(),
            dir.path().join("x.tsv"),
        )
        .unwrap_err();
        match err {
            AnnotationError::UnknownSeed { id } => assert_eq!(id, "nope"),
            other => panic!("unexpected error {other}"),
        }
    }

    fn write_sheet(dir: &Path, name: &str, rows: &[(&str, &str)]) -> PathBuf {
        let path = dir.join(name);
        let mut body = format!("{SHEET_HEADER}\n");
        for (id, label) in rows {
            body.push_str(&format!("{id}\tadjective\tx\tg\t{label}\n"));
        }
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn import_reads_two_annotators() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_sheet(dir.path(), "a.tsv", &[("s1", "positive"), ("s2", "negative")]);
        let b = write_sheet(dir.path(), "b.tsv", &[("s1", "positive"), ("s2", "neutral")]);
        let set = import_annotations(&[a, b]).unwrap();
        assert_eq!(set.annotator_count(), 2);
        assert_eq!(set.item_count(), 2);
        assert_eq!(set.disagreements(), vec!["s2".to_string()]);
    }

    #[test]
    fn import_rejects_shorthand_label_with_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_sheet(dir.path(), "a.tsv", &[("s1", "pos")]);
        let err = load_labeled_sheet(&a).unwrap_err();
        match err {
            AnnotationError::Sheet { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("pos"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn import_rejects_missing_label() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_sheet(dir.path(), "a.tsv", &[("s1", "")]);
        assert!(matches!(
            load_labeled_sheet(&a),
            Err(AnnotationError::Sheet { line: 2, .. })
        ));
    }

    #[test]
    fn import_rejects_universe_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_sheet(dir.path(), "a.tsv", &[("s1", "positive")]);
        let b = write_sheet(dir.path(), "b.tsv", &[("s2", "positive")]);
        assert!(matches!(
            import_annotations(&[a, b]),
            Err(AnnotationError::UniverseMismatch { .. })
        ));
    }

    #[test]
    fn kappa_is_one_under_perfect_agreement() {
        let labels: Vec<(&str, &str)> = (0..10)
            .map(|i| {
                let id: &str = Box::leak(format!("s{i}").into_boxed_str());
                (id, if i % 2 == 0 { "positive" } else { "negative" })
            })
            .collect();
        let set = set_from(&[("a", &labels), ("b", &labels)]);
        assert_eq!(set.fleiss_kappa().unwrap(), 1.0);
    }

    #[test]
    fn kappa_matches_hand_computed_fixture() {
        // Items: (pos,pos), (neg,neg), (pos,neg), (neu,neu).
        // Pbar = 3/4, Pe = 22/64, kappa = 13/21.
        let set = set_from(&[
            (
                "a",
                &[
                    ("i1", "positive"),
                    ("i2", "negative"),
                    ("i3", "positive"),
                    ("i4", "neutral"),
                ],
            ),
            (
                "b",
                &[
                    ("i1", "positive"),
                    ("i2", "negative"),
                    ("i3", "negative"),
                    ("i4", "neutral"),
                ],
            ),
        ]);
        let kappa = set.fleiss_kappa().unwrap();
        let expected = 13.0 / 21.0;
        assert!((kappa - expected).abs() < 1e-9, "kappa = {kappa}");

        // Same value from an independently written floating-point evaluation
        // of the textbook formula.
        let items = 4.0_f64;
        let p_bar = (1.0 + 1.0 + 0.0 + 1.0) / items;
        let p_e = (3.0_f64 / 8.0).powi(2) + (2.0_f64 / 8.0).powi(2) + (3.0_f64 / 8.0).powi(2);
        let oracle = (p_bar - p_e) / (1.0 - p_e);
        assert!((kappa - oracle).abs() < 1e-9);
    }

    #[test]
    fn kappa_requires_two_annotators() {
        let sheets = vec![(
            "a".to_string(),
            vec![("s1".to_string(), Label::Positive)],
        )];
        assert!(matches!(
            AnnotationSet::from_sheets(sheets),
            Err(AnnotationError::TooFewAnnotators(1))
        ));
    }

    #[test]
    fn adjudicate_unanimous_set_has_no_adjudicated_items() {
        let set = set_from(&[
            ("a", &[("s1", "positive"), ("s2", "negative")]),
            ("b", &[("s1", "positive"), ("s2", "negative")]),
        ]);
        let adjudication = set.adjudicate(&BTreeMap::new()).unwrap();
        assert_eq!(adjudication.gold.adjudicated_count(), 0);
        assert_eq!(adjudication.gold.get("s1").unwrap().label, Label::Positive);
        assert!(adjudication.warnings.is_empty());
    }

    #[test]
    fn adjudicate_uses_tiebreaker_for_disagreements() {
        let set = set_from(&[
            ("a", &[("s1", "positive"), ("s3", "positive")]),
            ("b", &[("s1", "positive"), ("s3", "neutral")]),
        ]);
        let tiebreak: BTreeMap<String, Label> =
            [("s3".to_string(), Label::Negative)].into_iter().collect();
        let adjudication = set.adjudicate(&tiebreak).unwrap();
        let s3 = adjudication.gold.get("s3").unwrap();
        assert_eq!(s3.label, Label::Negative);
        assert_eq!(s3.provenance, Provenance::Adjudicated);
    }

    #[test]
    fn adjudicate_errors_on_missing_tiebreak() {
        let set = set_from(&[
            ("a", &[("s1", "positive")]),
            ("b", &[("s1", "negative")]),
        ]);
        let err = set.adjudicate(&BTreeMap::new()).unwrap_err();
        match err {
            AnnotationError::MissingTiebreak { ids } => assert_eq!(ids, vec!["s1".to_string()]),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn adjudicate_warns_on_tiebreak_for_agreed_item() {
        let set = set_from(&[
            ("a", &[("s1", "positive"), ("s2", "positive")]),
            ("b", &[("s1", "positive"), ("s2", "negative")]),
        ]);
        let tiebreak: BTreeMap<String, Label> = [
            ("s1".to_string(), Label::Negative),
            ("s2".to_string(), Label::Positive),
        ]
        .into_iter()
        .collect();
        let adjudication = set.adjudicate(&tiebreak).unwrap();
        assert_eq!(adjudication.warnings.len(), 1);
        // The agreed item keeps its unanimous label.
        assert_eq!(adjudication.gold.get("s1").unwrap().label, Label::Positive);
    }

    #[test]
    fn adjudicate_is_annotator_order_invariant() {
        let a: &[(&str, &str)] = &[("s1", "positive"), ("s2", "negative")];
        let b: &[(&str, &str)] = &[("s1", "positive"), ("s2", "neutral")];
        let tiebreak: BTreeMap<String, Label> =
            [("s2".to_string(), Label::Neutral)].into_iter().collect();
        let forward = set_from(&[("a", a), ("b", b)]).adjudicate(&tiebreak).unwrap();
        let backward = set_from(&[("b", b), ("a", a)]).adjudicate(&tiebreak).unwrap();
        assert_eq!(forward.gold, backward.gold);
    }

    #[test]
    fn gold_standard_file_round_trip() {
        let set = set_from(&[
            ("a", &[("s1", "positive"), ("s2", "negative")]),
            ("b", &[("s1", "positive"), ("s2", "positive")]),
        ]);
        let tiebreak: BTreeMap<String, Label> =
            [("s2".to_string(), Label::Negative)].into_iter().collect();
        let gold = set.adjudicate(&tiebreak).unwrap().gold;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gold.tsv");
        gold.save(&path).unwrap();
        assert_eq!(GoldStandard::load(&path).unwrap(), gold);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn arb_table() -> impl Strategy<Value = Vec<Vec<Label>>> {
            // annotators x items, 2..5 annotators, 1..20 items
            (2usize..5, 1usize..20).prop_flat_map(|(raters, items)| {
                proptest::collection::vec(
                    proptest::collection::vec(
                        proptest::sample::select(Label::ALL.to_vec()),
                        items..=items,
                    ),
                    raters..=raters,
                )
            })
        }

        fn to_set(table: &[Vec<Label>]) -> AnnotationSet {
            let sheets = table
                .iter()
                .enumerate()
                .map(|(a, row)| {
                    (
                        format!("annotator{a}"),
                        row.iter()
                            .enumerate()
                            .map(|(i, &l)| (format!("item{i:03}"), l))
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            AnnotationSet::from_sheets(sheets).unwrap()
        }

        proptest! {
            #[test]
            fn kappa_invariant_under_annotator_and_item_permutation(
                table in arb_table(),
                annotator_rot in 0usize..4,
                item_rot in 0usize..19,
            ) {
                let base = to_set(&table).fleiss_kappa().unwrap();

                let mut rotated = table.clone();
                let raters = rotated.len();
                rotated.rotate_left(annotator_rot % raters);
                let items = rotated[0].len();
                for row in &mut rotated {
                    row.rotate_left(item_rot % items);
                }
                let permuted = to_set(&rotated).fleiss_kappa().unwrap();
                // Exact equality: the statistic is computed with integer
                // arithmetic and a single final division.
                prop_assert_eq!(base, permuted);
            }

            #[test]
            fn kappa_is_one_iff_unanimous(table in arb_table()) {
                let set = to_set(&table);
                let unanimous = (0..table[0].len())
                    .all(|i| table.iter().all(|row| row[i] == table[0][i]));
                let kappa = set.fleiss_kappa().unwrap();
                if unanimous {
                    prop_assert_eq!(kappa, 1.0);
                } else {
                    prop_assert!(kappa < 1.0);
                }
            }

            #[test]
            fn adjudication_domain_equals_universe(table in arb_table()) {
                let set = to_set(&table);
                let tiebreak: BTreeMap<String, Label> = set
                    .disagreements()
                    .into_iter()
                    .map(|id| (id, Label::Neutral))
                    .collect();
                let adjudication = set.adjudicate(&tiebreak).unwrap();
                prop_assert_eq!(adjudication.gold.len(), set.item_count());
            }
        }
    }
}
