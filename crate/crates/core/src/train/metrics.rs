use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{predict, HanModel};

/// Classification metrics. `confusion[t][p]` counts windows of true class
/// `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// Zero for a class that is never predicted.
    pub precision: Vec<f64>,
    /// Zero for a class with no true windows.
    pub recall: Vec<f64>,
    pub confusion: Vec<Vec<usize>>,
}

impl Metrics {
    pub fn from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Empty("no predictions to score".into()));
        }
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!("{} labels but {} predictions", truth.len(), predicted.len())));
        }
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= num_classes || p >= num_classes {
                return Err(Error::Config(format!("class index out of range for {num_classes} classes")));
            }
            confusion[t][p] += 1;
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let trace: usize = (0..num_classes).map(|k| confusion[k][k]).sum();
        let precision =
            (0..num_classes).map(|k| ratio(confusion[k][k], (0..num_classes).map(|t| confusion[t][k]).sum())).collect();
        let recall = (0..num_classes).map(|k| ratio(confusion[k][k], confusion[k].iter().sum())).collect();
        Ok(Metrics { accuracy: trace as f64 / truth.len() as f64, precision, recall, confusion })
    }

    /// Confusion matrix as CSV: rows are true classes, columns predictions.
    pub fn confusion_csv(&self, class_names: &[String]) -> String {
        let name = |k: usize| class_names.get(k).cloned().unwrap_or_else(|| k.to_string());
        let mut s = String::from("true\\predicted");
        for k in 0..self.confusion.len() {
            let _ = write!(s, ",{}", name(k));
        }
        s.push('\n');
        for (t, row) in self.confusion.iter().enumerate() {
            s.push_str(&name(t));
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Eval-mode predictions for every window, in dataset order.
pub fn predict_all(model: &HanModel, dataset: &Dataset) -> Result<Vec<usize>> {
    dataset.windows.par_iter().map(|w| predict(model, &w.samples).map(|p| p.class())).collect()
}

/// Accuracy, per-class precision/recall and the confusion matrix. Runs on
/// the current rayon pool; the result does not depend on its size.
pub fn evaluate(model: &HanModel, dataset: &Dataset) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty dataset".into()));
    }
    let predicted = predict_all(model, dataset)?;
    let truth: Vec<usize> = dataset.windows.iter().map(|w| w.label).collect();
    Metrics::from_predictions(&truth, &predicted, model.config.num_classes)
}
