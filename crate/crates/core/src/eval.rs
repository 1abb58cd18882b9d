//! Confusion matrices and classification reports.
//!
//! Per-class precision, recall and F1 are the usual ratios. The macro F1 is
//! the harmonic mean of macro precision and macro recall, not the mean of
//! per-class F1 scores. All reported values are percentages rounded half-up
//! to two decimals.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::vectorize::SparseVector;

/// Rows are gold labels, columns predictions, both in canonical order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn from_rows(counts: [[u64; 4]; 4]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn get(&self, gold: Label, pred: Label) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, gold: Label) -> u64 {
        self.counts[gold.index()].iter().sum()
    }

    pub fn column_sum(&self, pred: Label) -> u64 {
        self.counts.iter().map(|r| r[pred.index()]).sum()
    }
}

pub fn confusion(golds: &[Label], preds: &[Label]) -> Result<ConfusionMatrix> {
    if golds.len() != preds.len() {
        return Err(Error::InvalidInput(format!(
            "{} gold labels but {} predictions",
            golds.len(),
            preds.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (g, p) in golds.iter().zip(preds) {
        cm.counts[g.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

/// Percentage with two decimals, halves rounded up.
pub fn percent(fraction: f64) -> f64 {
    // The nudge absorbs representation error such as 47.004999999.
    (fraction * 10_000.0 + 1e-7 + 0.5).floor() / 100.0
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

pub fn report_from_confusion(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    if cm.total() == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let mut classes = Vec::with_capacity(4);
    let (mut sum_p, mut sum_r) = (0.0, 0.0);
    for label in Label::ALL {
        let hit = cm.get(label, label);
        let p = ratio(hit, cm.column_sum(label));
        let r = ratio(hit, cm.row_sum(label));
        sum_p += p;
        sum_r += r;
        classes.push(ClassMetrics {
            label,
            precision: percent(p),
            recall: percent(r),
            f1: percent(harmonic(p, r)),
            support: cm.row_sum(label),
        });
    }
    let macro_p = sum_p / 4.0;
    let macro_r = sum_r / 4.0;
    Ok(ClassificationReport {
        classes,
        macro_precision: percent(macro_p),
        macro_recall: percent(macro_r),
        macro_f1: percent(harmonic(macro_p, macro_r)),
        accuracy: percent(ratio(cm.trace(), cm.total())),
    })
}

impl ClassificationReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        &self.classes[label.index()]
    }
}

/// Report and matrix from one evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: ClassificationReport,
    pub confusion: ConfusionMatrix,
}

impl Evaluation {
    pub fn from_labels(golds: &[Label], preds: &[Label]) -> Result<Self> {
        let confusion = confusion(golds, preds)?;
        let report = report_from_confusion(&confusion)?;
        Ok(Evaluation { report, confusion })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("evaluation serializes")
    }

    /// Classification report beside the confusion matrix, as plain text.
    pub fn to_text(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        let mut out = String::new();
        writeln!(out, "{:<10}{:>8}{:>8}{:>8}", "", "Prec.", "Rec.", "F1")?;
        for c in &r.classes {
            writeln!(out, "{:<10}{:>8.2}{:>8.2}{:>8.2}", c.label, c.precision, c.recall, c.f1)?;
        }
        writeln!(
            out,
            "{:<10}{:>8.2}{:>8.2}{:>8.2}",
            "macro avg", r.macro_precision, r.macro_recall, r.macro_f1
        )?;
        writeln!(out, "Accuracy: {:.2}", r.accuracy)?;
        writeln!(out)?;
        write!(out, "{:<6}", "")?;
        for l in Label::ALL {
            write!(out, "{:>6}", l)?;
        }
        writeln!(out)?;
        for g in Label::ALL {
            write!(out, "{:<6}", g)?;
            for p in Label::ALL {
                write!(out, "{:>6}", self.confusion.get(g, p))?;
            }
            writeln!(out)?;
        }
        f.write_str(&out)
    }
}

/// Predicts every feature row and scores against the gold labels.
pub fn evaluate_features<C: Classifier + ?Sized>(
    classifier: &C,
    features: &[SparseVector],
    golds: &[Label],
) -> Result<(Evaluation, Vec<Label>)> {
    let preds = features
        .iter()
        .map(|x| classifier.predict(x))
        .collect::<Result<Vec<_>>>()?;
    Ok((Evaluation::from_labels(golds, &preds)?, preds))
}
