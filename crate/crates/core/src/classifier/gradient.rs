//! Finite-difference check of the analytic cross-entropy gradient.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ngram::{featurize, NgramModel};
use crate::corpus::LabeledExample;
use crate::label::{Label, NUM_LABELS};

pub const RELATIVE_TOLERANCE: f64 = 1e-4;
const STEP: f64 = 1e-5;
const FLOOR: f64 = 1e-6;
const MAX_BATCH: usize = 8;
const MIN_COORDINATES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientMismatch {
    pub label: Label,
    /// Feature column; equal to the feature count for the bias.
    pub feature: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

impl std::fmt::Display for GradientMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "gradient mismatch at ({}, {}): analytic {:e}, numeric {:e}, relative error {:e}",
            self.label, self.feature, self.analytic, self.numeric, self.relative_error
        )
    }
}

impl std::error::Error for GradientMismatch {}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub coordinates_checked: usize,
    /// Coordinate with the largest relative error.
    pub worst: GradientMismatch,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.worst.relative_error <= RELATIVE_TOLERANCE
    }

    pub fn into_result(self) -> Result<GradientReport, GradientMismatch> {
        if self.passed() {
            Ok(self)
        } else {
            Err(self.worst)
        }
    }
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

/// Compares the analytic gradient of the mean cross-entropy on the first
/// eight examples of `batch` against central differences, on a seeded sample
/// of at least 1% of the weights that the batch can influence.
pub fn evaluate_gradient(model: &NgramModel, batch: &[LabeledExample], seed: u64) -> GradientReport {
    let encoded: Vec<_> = batch
        .iter()
        .take(MAX_BATCH)
        .map(|e| (featurize(&e.text, model.feature_index()), e.label))
        .collect();
    let width = model.width();

    let mut grad = vec![0.0; model.weights().len()];
    let mut touched = Vec::new();
    let refs: Vec<_> = encoded.iter().collect();
    if !refs.is_empty() {
        model.accumulate_gradient(&refs, &mut grad, &mut touched);
    }

    let mut columns: Vec<usize> = encoded.iter().flat_map(|(x, _)| x.iter().map(|(j, _)| *j)).collect();
    columns.push(width - 1);
    columns.sort_unstable();
    columns.dedup();
    let active: Vec<usize> = (0..NUM_LABELS)
        .flat_map(|l| columns.iter().map(move |j| l * width + j))
        .collect();
    let wanted = (model.weights().len().div_ceil(100)).max(MIN_COORDINATES).min(active.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, active.len(), wanted);

    let mut probe = model.clone();
    let mut worst: Option<GradientMismatch> = None;
    for i in picks.iter() {
        let pos = active[i];
        let original = probe.weights()[pos];
        probe.weights_mut()[pos] = original + STEP;
        let up = probe.loss(&encoded);
        probe.weights_mut()[pos] = original - STEP;
        let down = probe.loss(&encoded);
        probe.weights_mut()[pos] = original;

        let numeric = (up - down) / (2.0 * STEP);
        let analytic = grad[pos];
        let candidate = GradientMismatch {
            label: Label::ALL[pos / width],
            feature: pos % width,
            analytic,
            numeric,
            relative_error: relative_error(analytic, numeric),
        };
        if worst.as_ref().is_none_or(|w| candidate.relative_error > w.relative_error) {
            worst = Some(candidate);
        }
    }
    GradientReport {
        coordinates_checked: picks.len(),
        worst: worst.expect("bias column is always active"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{TrainConfig, TrainingMeta};

    fn batch() -> Vec<LabeledExample> {
        [
            ("fix this hack later", Label::CodeDesign),
            ("add unit test for edge case", Label::Test),
            ("formula only valid for small angles", Label::Scientific),
            ("returns the index", Label::NonSatd),
            ("document the parameters", Label::Documentation),
            ("todo support complex input", Label::Requirement),
            ("this hack ignores small angles", Label::Scientific),
            ("test the index later", Label::Test),
        ]
        .into_iter()
        .map(|(t, l)| LabeledExample::new("p", t, l))
        .collect()
    }

    fn model() -> NgramModel {
        let config = TrainConfig {
            min_freq: 1,
            max_epochs: 1,
            ..TrainConfig::default()
        };
        NgramModel::train(&batch(), &[], &config).unwrap()
    }

    #[test]
    fn random_init_passes() {
        let mut m = model();
        m.randomize(0, 0.5);
        let report = evaluate_gradient(&m, &batch(), 0);
        assert!(report.coordinates_checked >= MIN_COORDINATES);
        assert!(report.passed(), "{}", report.worst);
    }

    #[test]
    fn trained_weights_pass_for_several_seeds() {
        let m = model();
        for seed in 0..5 {
            evaluate_gradient(&m, &batch(), seed).into_result().unwrap();
        }
    }

    #[test]
    fn zero_weights_give_closed_form_bias_gradient() {
        let features = vec!["a".to_string()];
        let m = NgramModel::from_parts(features, vec![0.0; 12], TrainingMeta::default()).unwrap();
        let one = [LabeledExample::new("p", "b", Label::Test)];
        let report = evaluate_gradient(&m, &one, 0);
        // only the six biases are active
        assert_eq!(report.coordinates_checked, 6);
        assert!(report.passed());
        let mut grad = vec![0.0; 12];
        let encoded = [(Vec::new(), Label::Test)];
        m.accumulate_gradient(&[&encoded[0]], &mut grad, &mut Vec::new());
        for label in Label::ALL {
            let expected = 1.0 / 6.0 - if label == Label::Test { 1.0 } else { 0.0 };
            assert!((grad[m.weight_position(label, 1)] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        assert!(relative_error(1.0, 1.0 + 2e-4) > RELATIVE_TOLERANCE);
        assert!(relative_error(1e-11, 0.0) < RELATIVE_TOLERANCE);
        assert!(relative_error(0.5, 0.5 + 1e-7) < RELATIVE_TOLERANCE);
    }
}
