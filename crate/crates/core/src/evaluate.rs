//! Scoring predictions against a gold standard and aggregating run matrices.
//!
//! F-measure is reported as the unweighted mean of per-category F1 over the
//! three sentiment categories (macro averaging); per-category values are
//! always included so any other averaging can be recomputed externally.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::GoldStandard;
use crate::expansion::Algorithm;
use crate::label::Label;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions missing for gold ids: {}", ids.join(", "))]
    MissingPredictions { ids: Vec<String> },
    #[error("run matrix is empty")]
    EmptyMatrix,
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion matrix plus derived rates for one prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub item_count: usize,
    /// Rows = gold, columns = predicted, both in label order
    /// negative, neutral, positive.
    pub confusion: [[usize; 3]; 3],
    pub accuracy: f64,
    pub per_category: BTreeMap<Label, CategoryScores>,
    /// Unweighted mean of per-category F1 (macro averaging).
    pub macro_f: f64,
    pub averaging: String,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Build a report from (gold, predicted) pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> EvalReport {
        let mut confusion = [[0usize; 3]; 3];
        let mut item_count = 0usize;
        for (gold, predicted) in pairs {
            confusion[gold.index()][predicted.index()] += 1;
            item_count += 1;
        }

        let mut warnings = Vec::new();
        let trace: usize = (0..3).map(|i| confusion[i][i]).sum();
        let accuracy = if item_count > 0 {
            trace as f64 / item_count as f64
        } else {
            0.0
        };

        let mut per_category = BTreeMap::new();
        let mut f_sum = 0.0;
        for label in Label::ALL {
            let j = label.index();
            let tp = confusion[j][j];
            let gold_total: usize = confusion[j].iter().sum();
            let predicted_total: usize = (0..3).map(|i| confusion[i][j]).sum();

            if gold_total == 0 && predicted_total == 0 {
                warnings.push(format!(
                    "category `{label}` absent from gold and predictions; F1 = 0 in macro-F"
                ));
            }
            let precision = if predicted_total > 0 {
                tp as f64 / predicted_total as f64
            } else {
                if tp == 0 && gold_total > 0 {
                    warnings.push(format!(
                        "category `{label}` never predicted; precision = 0"
                    ));
                }
                0.0
            };
            let recall = if gold_total > 0 {
                tp as f64 / gold_total as f64
            } else {
                0.0
            };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            f_sum += f1;
            per_category.insert(
                label,
                CategoryScores {
                    precision,
                    recall,
                    f1,
                },
            );
        }

        EvalReport {
            item_count,
            confusion,
            accuracy,
            per_category,
            macro_f: f_sum / 3.0,
            averaging: "macro (unweighted mean of per-category F1; an interpretation)".into(),
            warnings,
        }
    }

    /// Aligned plain-text table.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "items: {}  accuracy: {:.5}  macro-F: {:.5}\n",
            self.item_count, self.accuracy, self.macro_f
        ));
        out.push_str(&format!("averaging: {}\n", self.averaging));
        out.push_str("category   precision  recall     f1         gold\\pred   neg   neu   pos\n");
        for label in Label::ALL {
            let scores = &self.per_category[&label];
            let row = self.confusion[label.index()];
            out.push_str(&format!(
                "{:<10} {:<10.5} {:<10.5} {:<10.5} {:<11} {:<5} {:<5} {:<5}\n",
                label.as_str(),
                scores.precision,
                scores.recall,
                scores.f1,
                label.as_str(),
                row[0],
                row[1],
                row[2]
            ));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, body).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Score predictions against the gold standard. Every gold id must be
/// predicted; predictions outside the gold domain are ignored.
pub fn evaluate(
    predictions: &BTreeMap<String, Label>,
    gold: &GoldStandard,
) -> Result<EvalReport, EvalError> {
    let missing: Vec<String> = gold
        .iter()
        .filter(|(id, _)| !predictions.contains_key(*id))
        .map(|(id, _)| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPredictions { ids: missing });
    }
    Ok(EvalReport::from_pairs(
        gold.iter().map(|(id, entry)| (entry.label, predictions[id])),
    ))
}

/// Which classifier produced a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Centroid,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Centroid => "centroid",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "knn" => Ok(ClassifierKind::Knn),
            "centroid" => Ok(ClassifierKind::Centroid),
            other => Err(format!(
                "unknown classifier `{other}` (expected knn or centroid)"
            )),
        }
    }
}

/// Identity of one (dataset, classifier) run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub dataset: String,
    pub case: u8,
    pub algorithm: Algorithm,
    pub classifier: ClassifierKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: RunInfo,
    pub report: EvalReport,
}

impl RunReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(self).expect("run report serializes");
        fs::write(path, body).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunReport, EvalError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&body).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// The full dataset-by-classifier run matrix.
#[derive(Debug, Clone, Default)]
pub struct RunMatrix {
    entries: Vec<RunReport>,
}

/// Axis along which run macro-F values are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    ExpansionAlgorithm,
    ExpansionCase,
    Classifier,
}

impl std::str::FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "algorithm" => Ok(Grouping::ExpansionAlgorithm),
            "case" => Ok(Grouping::ExpansionCase),
            "classifier" => Ok(Grouping::Classifier),
            other => Err(format!(
                "unknown grouping `{other}` (expected algorithm, case, or classifier)"
            )),
        }
    }
}

impl RunMatrix {
    pub fn new(entries: Vec<RunReport>) -> RunMatrix {
        RunMatrix { entries }
    }

    pub fn push(&mut self, entry: RunReport) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[RunReport] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Load every `*.json` run report in a directory, sorted by file name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<RunMatrix, EvalError> {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|source| EvalError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        let mut entries = Vec::new();
        for path in paths {
            entries.push(RunReport::load(&path)?);
        }
        Ok(RunMatrix { entries })
    }

    /// Tabular summary: one line per run.
    pub fn summary_table(&self) -> String {
        let mut out =
            String::from("dataset\tcase\talgorithm\tclassifier\taccuracy\tmacro_f\n");
        for entry in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.5}\t{:.5}\n",
                entry.run.dataset,
                entry.run.case,
                entry.run.algorithm,
                entry.run.classifier,
                entry.report.accuracy,
                entry.report.macro_f
            ));
        }
        out
    }
}

/// Mean macro-F per group along the chosen axis. Values are summed in
/// sorted order so the result does not depend on entry order.
pub fn aggregate_by(
    matrix: &RunMatrix,
    grouping: Grouping,
) -> Result<BTreeMap<String, f64>, EvalError> {
    if matrix.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for entry in matrix.entries() {
        let key = match grouping {
            Grouping::ExpansionAlgorithm => entry.run.algorithm.to_string(),
            Grouping::ExpansionCase => entry.run.case.to_string(),
            Grouping::Classifier => entry.run.classifier.to_string(),
        };
        groups.entry(key).or_default().push(entry.report.macro_f);
    }
    Ok(groups
        .into_iter()
        .map(|(key, mut values)| {
            values.sort_by(f64::total_cmp);
            let count = values.len() as f64;
            (key, values.into_iter().sum::<f64>() / count)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{GoldEntry, Provenance};

    fn gold_from(labels: &[(&str, Label)]) -> GoldStandard {
        GoldStandard::from_entries(
            labels
                .iter()
                .map(|(id, label)| {
                    (
                        id.to_string(),
                        GoldEntry {
                            label: *label,
                            provenance: Provenance::Agreed,
                        },
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn perfect_predictions_score_one() {
        let gold = gold_from(&[
            ("a", Label::Positive),
            ("b", Label::Neutral),
            ("c", Label::Negative),
        ]);
        let predictions: BTreeMap<String, Label> = gold.labels();
        let report = evaluate(&predictions, &gold).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f, 1.0);
        assert_eq!(report.item_count, 3);
    }

    #[test]
    fn all_neutral_on_balanced_gold_matches_hand_values() {
        // Gold: 2 pos, 2 neu, 2 neg; everything predicted neutral.
        // accuracy = 1/3; macro-F = mean(0, 1/2, 0) = 1/6.
        let gold = gold_from(&[
            ("a", Label::Positive),
            ("b", Label::Positive),
            ("c", Label::Neutral),
            ("d", Label::Neutral),
            ("e", Label::Negative),
            ("f", Label::Negative),
        ]);
        let predictions: BTreeMap<String, Label> = gold
            .iter()
            .map(|(id, _)| (id.to_string(), Label::Neutral))
            .collect();
        let report = evaluate(&predictions, &gold).unwrap();
        assert!((report.accuracy - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.macro_f - 1.0 / 6.0).abs() < 1e-12);
        let neutral = &report.per_category[&Label::Neutral];
        assert!((neutral.precision - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(neutral.recall, 1.0);
        assert!((neutral.f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_prediction_lists_ids() {
        let gold = gold_from(&[("a", Label::Positive), ("b", Label::Negative)]);
        let predictions: BTreeMap<String, Label> =
            [("a".to_string(), Label::Positive)].into_iter().collect();
        let err = evaluate(&predictions, &gold).unwrap_err();
        match err {
            EvalError::MissingPredictions { ids } => assert_eq!(ids, vec!["b".to_string()]),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn confusion_totals_equal_item_count() {
        let pairs = vec![
            (Label::Positive, Label::Negative),
            (Label::Positive, Label::Positive),
            (Label::Neutral, Label::Neutral),
            (Label::Negative, Label::Neutral),
        ];
        let report = EvalReport::from_pairs(pairs);
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, report.item_count);
        let trace: usize = (0..3).map(|i| report.confusion[i][i]).sum();
        assert!((report.accuracy - trace as f64 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn report_is_item_order_invariant() {
        let pairs = vec![
            (Label::Positive, Label::Negative),
            (Label::Neutral, Label::Neutral),
            (Label::Negative, Label::Positive),
        ];
        let mut reversed = pairs.clone();
        reversed.reverse();
        assert_eq!(EvalReport::from_pairs(pairs), EvalReport::from_pairs(reversed));
    }

    #[test]
    fn absent_category_warns_and_contributes_zero() {
        let pairs = vec![(Label::Positive, Label::Positive)];
        let report = EvalReport::from_pairs(pairs);
        assert!(report
            .warnings
            .iter()
            .any(|w| w.contains("negative") || w.contains("neutral")));
        assert!((report.macro_f - 1.0 / 3.0).abs() < 1e-12);
    }

    fn run(
        dataset: &str,
        case: u8,
        algorithm: Algorithm,
        classifier: ClassifierKind,
        macro_f: f64,
    ) -> RunReport {
        let mut report = EvalReport::from_pairs(vec![(Label::Positive, Label::Positive)]);
        report.macro_f = macro_f;
        RunReport {
            run: RunInfo {
                dataset: dataset.into(),
                case,
                algorithm,
                classifier,
            },
            report,
        }
    }

    #[test]
    fn aggregate_means_per_group() {
        let matrix = RunMatrix::new(vec![
            run("Data-1", 1, Algorithm::Default, ClassifierKind::Knn, 0.4),
            run("Data-2", 1, Algorithm::Pmi, ClassifierKind::Knn, 0.6),
            run("Data-3", 2, Algorithm::Default, ClassifierKind::Centroid, 0.8),
        ]);
        let by_algorithm = aggregate_by(&matrix, Grouping::ExpansionAlgorithm).unwrap();
        assert!((by_algorithm["default"] - 0.6).abs() < 1e-12);
        assert!((by_algorithm["pmi"] - 0.6).abs() < 1e-12);

        let by_case = aggregate_by(&matrix, Grouping::ExpansionCase).unwrap();
        assert!((by_case["1"] - 0.5).abs() < 1e-12);
        assert!((by_case["2"] - 0.8).abs() < 1e-12);

        let by_classifier = aggregate_by(&matrix, Grouping::Classifier).unwrap();
        assert!((by_classifier["knn"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aggregate_rejects_empty_matrix() {
        assert!(matches!(
            aggregate_by(&RunMatrix::default(), Grouping::Classifier),
            Err(EvalError::EmptyMatrix)
        ));
    }

    #[test]
    fn run_report_round_trips_through_json() {
        let entry = run("Data-5", 3, Algorithm::Default, ClassifierKind::Knn, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("Data-5_knn.json");
        entry.save(&path).unwrap();
        assert_eq!(RunReport::load(&path).unwrap(), entry);

        let matrix = RunMatrix::load_dir(dir.path()).unwrap();
        assert_eq!(matrix.len(), 1);
        assert_eq!(matrix.entries()[0], entry);
    }

    #[test]
    fn binary_collapse_recall_consistency() {
        // Collapsing neutral into negative: recall recomputed from raw pairs
        // equals the value derived from the 3x3 confusion matrix.
        let pairs = vec![
            (Label::Positive, Label::Positive),
            (Label::Positive, Label::Neutral),
            (Label::Neutral, Label::Negative),
            (Label::Negative, Label::Negative),
            (Label::Negative, Label::Positive),
        ];
        let report = EvalReport::from_pairs(pairs.clone());

        let collapse = |l: Label| if l == Label::Neutral { Label::Negative } else { l };
        let collapsed_pairs: Vec<(Label, Label)> = pairs
            .iter()
            .map(|&(g, p)| (collapse(g), collapse(p)))
            .collect();
        let collapsed_report = EvalReport::from_pairs(collapsed_pairs.clone());

        // Raw recomputation for the collapsed positive class.
        let tp = collapsed_pairs
            .iter()
            .filter(|(g, p)| *g == Label::Positive && *p == Label::Positive)
            .count();
        let gold_pos = collapsed_pairs
            .iter()
            .filter(|(g, _)| *g == Label::Positive)
            .count();
        let expected = tp as f64 / gold_pos as f64;
        assert!(
            (collapsed_report.per_category[&Label::Positive].recall - expected).abs() < 1e-12
        );

        // And the collapsed matrix row sums tie back to the 3x3 rows.
        let pos_row_total: usize = report.confusion[Label::Positive.index()].iter().sum();
        let collapsed_pos_total: usize =
            collapsed_report.confusion[Label::Positive.index()].iter().sum();
        assert_eq!(pos_row_total, collapsed_pos_total);
    }
}
