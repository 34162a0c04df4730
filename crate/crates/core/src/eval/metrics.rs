//! Confusion matrices and precision/recall/F1 reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::language::LanguageId;

/// Rows are true classes, columns predicted classes, both in code order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<LanguageId>,
    pub counts: Vec<Vec<u64>>,
}

/// Tallies over the union of the labels seen in either vector.
pub fn confusion_matrix(truth: &[LanguageId], predicted: &[LanguageId]) -> Result<ConfusionMatrix, EvalError> {
    let mut classes: Vec<LanguageId> = truth.iter().chain(predicted).copied().collect();
    classes.sort();
    classes.dedup();
    confusion_matrix_with_classes(truth, predicted, &classes)
}

pub fn confusion_matrix_with_classes(
    truth: &[LanguageId],
    predicted: &[LanguageId],
    classes: &[LanguageId],
) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::InvalidArgument(
            "cannot build a confusion matrix from no labels".into(),
        ));
    }
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    let pos = |l: &LanguageId| {
        classes
            .binary_search(l)
            .map_err(|_| EvalError::InvalidArgument(format!("label {l} is not in the class list")))
    };
    for (t, p) in truth.iter().zip(predicted) {
        counts[pos(t)?][pos(p)?] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Row-normalized percentages (each nonempty row sums to 100).
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if s == 0 { 0.0 } else { 100.0 * c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }

    /// CSV with a `true\predicted` header row of class names.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.classes.iter().map(|c| c.to_string()));
        w.write_record(&header).expect("in-memory write");
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let mut rec = vec![c.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub language: LanguageId,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when precision had a zero denominator (reported as 0).
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::InvalidArgument("confusion matrix is empty".into()));
    }
    let k = cm.classes.len();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let row: u64 = cm.counts[c].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[c]).sum();
            let precision = if col == 0 { 0.0 } else { tp / col as f64 };
            let recall = if row == 0 { 0.0 } else { tp / row as f64 };
            ClassMetrics {
                language: cm.classes[c],
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: row,
                precision_undefined: col == 0,
                recall_undefined: row == 0,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        total,
        confusion: cm.clone(),
    })
}

pub fn evaluate_labels(truth: &[LanguageId], predicted: &[LanguageId]) -> Result<MetricsReport, EvalError> {
    metrics_from_confusion(&confusion_matrix(truth, predicted)?)
}

/// Fraction of positions where the labels agree.
pub fn accuracy(truth: &[LanguageId], predicted: &[LanguageId]) -> f64 {
    let hits = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    hits as f64 / truth.len().max(1) as f64
}

impl MetricsReport {
    /// Aligned table with the columns Programming, Precision, Recall,
    /// F1-score (two decimals), followed by accuracy and macro averages.
    pub fn to_table(&self) -> String {
        let width = self
            .per_class
            .iter()
            .map(|m| m.language.as_str().len())
            .max()
            .unwrap_or(0)
            .max("Programming".len());
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>6}  {:>8}",
            "Programming", "Precision", "Recall", "F1-score"
        );
        for m in &self.per_class {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9.2}  {:>6.2}  {:>8.2}",
                m.language.as_str(),
                m.precision,
                m.recall,
                m.f1
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:>9.2}  {:>6.2}  {:>8.2}",
            "macro avg", self.macro_precision, self.macro_recall, self.macro_f1
        );
        let _ = writeln!(s, "accuracy {:.2}% ({} samples)", 100.0 * self.accuracy, self.total);
        s
    }
}
