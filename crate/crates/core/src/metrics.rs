//! Confusion matrices, per-class precision/recall/F1 and macro F1.
//!
//! Zero-division convention: precision, recall and F1 are 0 whenever their
//! denominator is 0. Every class of the label set contributes to the macro
//! mean, including classes with no gold and no predicted examples.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::types::{ExampleId, Label};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("prediction and gold id sets differ: {} missing from predictions (first: {:?}), {} extra (first: {:?})", missing.len(), missing.first(), extra.len(), extra.first())]
    IdMismatch {
        missing: Vec<ExampleId>,
        extra: Vec<ExampleId>,
    },
    #[error("duplicate id {0}")]
    DuplicateId(ExampleId),
    #[error("label {0} is not one of the scored classes")]
    UnknownClass(Label),
    #[error("class index {index} out of range for {num_classes} classes")]
    IndexOutOfRange { index: usize, num_classes: usize },
    #[error("gold and predicted sequences differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
}

/// `counts[gold][pred]` over an ordered class list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let n = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; n]; n],
        }
    }

    /// Matrix over class indices `0..num_classes`, named by their index.
    pub fn from_indices(
        num_classes: usize,
        gold: &[usize],
        pred: &[usize],
    ) -> Result<Self, MetricsError> {
        if gold.len() != pred.len() {
            return Err(MetricsError::LengthMismatch {
                gold: gold.len(),
                pred: pred.len(),
            });
        }
        let mut m = ConfusionMatrix::new((0..num_classes).map(|i| i.to_string()).collect());
        for (&g, &p) in gold.iter().zip(pred) {
            m.record(g, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, gold: usize, pred: usize) -> Result<(), MetricsError> {
        let n = self.num_classes();
        for index in [gold, pred] {
            if index >= n {
                return Err(MetricsError::IndexOutOfRange {
                    index,
                    num_classes: n,
                });
            }
        }
        self.counts[gold][pred] += 1;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn count(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }
}

/// Tabulates predictions against gold labels matched by example id.
pub fn confusion(
    preds: &[(ExampleId, Label)],
    gold: &[(ExampleId, Label)],
    classes: &[Label],
) -> Result<ConfusionMatrix, MetricsError> {
    let index_of = |label: Label| {
        classes
            .iter()
            .position(|&c| c == label)
            .ok_or(MetricsError::UnknownClass(label))
    };

    let mut pred_by_id = HashMap::with_capacity(preds.len());
    for &(id, label) in preds {
        if pred_by_id.insert(id, index_of(label)?).is_some() {
            return Err(MetricsError::DuplicateId(id));
        }
    }

    let mut gold_ids = BTreeSet::new();
    let mut missing = Vec::new();
    let mut pairs = Vec::with_capacity(gold.len());
    for &(id, label) in gold {
        if !gold_ids.insert(id) {
            return Err(MetricsError::DuplicateId(id));
        }
        let g = index_of(label)?;
        match pred_by_id.get(&id) {
            Some(&p) => pairs.push((g, p)),
            None => missing.push(id),
        }
    }
    let mut extra: Vec<ExampleId> = pred_by_id
        .keys()
        .filter(|id| !gold_ids.contains(id))
        .copied()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort_unstable();
        extra.sort_unstable();
        return Err(MetricsError::IdMismatch { missing, extra });
    }

    let mut m = ConfusionMatrix::new(classes.iter().map(|c| c.as_str().to_string()).collect());
    for (g, p) in pairs {
        m.record(g, p)?;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn macro_f1(m: &ConfusionMatrix) -> EvalReport {
    let n = m.num_classes();
    let per_class: Vec<ClassScores> = (0..n)
        .map(|c| {
            let tp = m.counts[c][c];
            let predicted: u64 = (0..n).map(|g| m.counts[g][c]).sum();
            let support: u64 = m.counts[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                class: m.class_names[c].clone(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let macro_f1 = if n == 0 {
        0.0
    } else {
        per_class.iter().map(|s| s.f1).sum::<f64>() / n as f64
    };
    EvalReport {
        per_class,
        macro_f1,
        total: m.total(),
    }
}

/// Macro F1 of index-encoded predictions.
pub fn macro_f1_indices(
    num_classes: usize,
    gold: &[usize],
    pred: &[usize],
) -> Result<f64, MetricsError> {
    Ok(macro_f1(&ConfusionMatrix::from_indices(num_classes, gold, pred)?).macro_f1)
}

impl EvalReport {
    /// Flat `key=value` lines for scripting.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "macro_f1={}", self.macro_f1);
        let _ = writeln!(out, "n={}", self.total);
        for s in &self.per_class {
            let _ = writeln!(out, "precision.{}={}", s.class, s.precision);
            let _ = writeln!(out, "recall.{}={}", s.class, s.recall);
            let _ = writeln!(out, "f1.{}={}", s.class, s.f1);
            let _ = writeln!(out, "support.{}={}", s.class, s.support);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>9} {:>9} {:>8}",
            "class", "precision", "recall", "f1", "support"
        );
        for s in &self.per_class {
            let _ = writeln!(
                out,
                "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                s.class, s.precision, s.recall, s.f1, s.support
            );
        }
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>9} {:>9.4} {:>8}",
            "macro", "", "", self.macro_f1, self.total
        );
        out
    }
}
