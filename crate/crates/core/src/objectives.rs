//! Classification objectives.
//!
//! A program's real-valued output is thresholded into a class prediction,
//! and the confusion counts become the minimisation pair `(1 − TPR, 1 − TNR)`.
//! Maximising TPR and TNR is the same problem with the orientation flipped.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;

/// Outputs at or above this value predict the positive class.
pub const DEFAULT_THRESHOLD: f64 = 0.0;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("labels contain no {0} cases")]
    MissingClass(Label),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionCounts {
    pub fn tpr(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn tnr(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }
}

/// Minimisation-form objective values.
#[derive(Debug, Clone, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Self {
        ObjectiveVector(values)
    }

    /// The first two entries as `(TPR, TNR)`.
    pub fn rates(&self) -> (f64, f64) {
        (1.0 - self.0[0], 1.0 - self.0[1])
    }
}

impl Deref for ObjectiveVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        ObjectiveVector(v)
    }
}

pub fn classify(semantics: &[f64], threshold: f64) -> Vec<Label> {
    semantics
        .iter()
        .map(|&v| {
            if v >= threshold {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect()
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionCounts, ObjectiveError> {
    if predictions.len() != labels.len() {
        return Err(ObjectiveError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (l, p) {
            (Label::Positive, Label::Positive) => c.tp += 1,
            (Label::Positive, Label::Negative) => c.fn_ += 1,
            (Label::Negative, Label::Negative) => c.tn += 1,
            (Label::Negative, Label::Positive) => c.fp += 1,
        }
    }
    if c.tp + c.fn_ == 0 {
        return Err(ObjectiveError::MissingClass(Label::Positive));
    }
    if c.tn + c.fp == 0 {
        return Err(ObjectiveError::MissingClass(Label::Negative));
    }
    Ok(c)
}

/// `(1 − TPR, 1 − TNR)`.
pub fn objective_vector(c: &ConfusionCounts) -> ObjectiveVector {
    ObjectiveVector(vec![1.0 - c.tpr(), 1.0 - c.tnr()])
}
