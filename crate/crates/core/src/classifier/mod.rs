//! Classification contract and the native backends.

mod gradient;
mod ngram;
mod patterns;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::label::{Label, PerLabel};
use crate::preprocess::is_normalized;

pub use gradient::{evaluate_gradient, GradientMismatch, GradientReport, RELATIVE_TOLERANCE};
pub use ngram::{
    featurize, softmax, ModelFormatError, NgramModel, TrainConfig, TrainError, TrainingMeta,
    MODEL_FORMAT, MODEL_VERSION,
};
pub use patterns::{PatternError, PatternRule, PatternRuleSet};

/// Predicted label with a probability per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Label,
    pub scores: PerLabel<f64>,
}

impl Classification {
    /// Takes the argmax of `scores`; ties go to the label that comes first in
    /// canonical order.
    pub fn from_scores(scores: PerLabel<f64>) -> Self {
        let mut best = Label::NonSatd;
        for label in Label::ALL {
            if scores[label] > scores[best] {
                best = label;
            }
        }
        Classification { label: best, scores }
    }

    pub fn one_hot(label: Label) -> Self {
        let mut scores = PerLabel::<f64>::default();
        scores[label] = 1.0;
        Classification { label, scores }
    }

    pub fn score(&self) -> f64 {
        self.scores[self.label]
    }

    /// Non-negative scores summing to one within 1e-6, with the label at the argmax.
    pub fn is_well_formed(&self) -> bool {
        let sum: f64 = self.scores.0.iter().sum();
        self.scores.0.iter().all(|s| s.is_finite() && *s >= 0.0)
            && (sum - 1.0).abs() <= 1e-6
            && Classification::from_scores(self.scores).label == self.label
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("text {index} is not normalized: {text:?}")]
    InvalidText { index: usize, text: String },
    #[error("backend failure for texts {}..{}: {message}", range.start, range.end)]
    BackendFailure { range: Range<usize>, message: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
}

/// Anything that can label normalized comment texts.
pub trait Classifier: Send + Sync {
    fn name(&self) -> String;

    /// Returns one classification per text, in input order.
    fn classify_batch(&self, texts: &[String]) -> Result<Vec<Classification>, ClassifyError>;
}

/// Validates inputs and runs `backend` over `texts`.
pub fn classify(texts: &[String], backend: &dyn Classifier) -> Result<Vec<Classification>, ClassifyError> {
    if let Some((index, text)) = texts.iter().enumerate().find(|(_, t)| !is_normalized(t)) {
        return Err(ClassifyError::InvalidText {
            index,
            text: text.clone(),
        });
    }
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let out = backend.classify_batch(texts)?;
    if out.len() != texts.len() {
        return Err(ClassifyError::MalformedResponse(format!(
            "expected {} results, got {}",
            texts.len(),
            out.len()
        )));
    }
    Ok(out)
}
