use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::error::{Error, Result};
use crate::signal::Dataset;

/// Accuracy and macro-averaged precision/recall with the confusion matrix
/// (`confusion[true][predicted]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl EvaluationReport {
    /// Builds the report from true and predicted labels. Classes with no
    /// predictions score precision 0; classes with no samples score recall 0.
    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Self {
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let total = truth.len();
        let trace: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let mut precision = 0.0;
        let mut recall = 0.0;
        for c in 0..classes {
            let tp = confusion[c][c] as f64;
            let predicted_c: usize = (0..classes).map(|t| confusion[t][c]).sum();
            let actual_c: usize = confusion[c].iter().sum();
            if predicted_c > 0 {
                precision += tp / predicted_c as f64;
            }
            if actual_c > 0 {
                recall += tp / actual_c as f64;
            }
        }
        EvaluationReport {
            accuracy: if total == 0 { 0.0 } else { trace as f64 / total as f64 },
            macro_precision: precision / classes as f64,
            macro_recall: recall / classes as f64,
            confusion,
            total,
        }
    }
}

/// Arg-max predictions for every signal, in dataset order.
pub fn predict_all(model: &Model, ds: &Dataset) -> Result<Vec<usize>> {
    ds.signals()
        .par_iter()
        .map(|s| model.predict(&s.samples))
        .collect()
}

pub fn evaluate(model: &Model, test: &Dataset) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    if test.class_count() != model.class_count() {
        return Err(Error::Shape(format!(
            "model has {} classes, test set has {}",
            model.class_count(),
            test.class_count()
        )));
    }
    let predicted = predict_all(model, test)?;
    let truth: Vec<usize> = test.signals().iter().map(|s| s.label).collect();
    Ok(EvaluationReport::from_predictions(&truth, &predicted, model.class_count()))
}
