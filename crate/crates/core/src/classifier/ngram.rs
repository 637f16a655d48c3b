//! Multinomial logistic regression over unigram and bigram counts.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classification, Classifier, ClassifyError};
use crate::corpus::LabeledExample;
use crate::label::{Label, PerLabel, NUM_LABELS};

pub const MODEL_FORMAT: &str = "satd-ngram";
pub const MODEL_VERSION: u32 = 1;
const NGRAM_ORDERS: [usize; 2] = [1, 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    /// Minimum corpus frequency for an n-gram to enter the vocabulary.
    pub min_freq: usize,
    pub seed: u64,
    pub require_all_labels: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            weight_decay: 0.0,
            max_epochs: 10,
            batch_size: 32,
            patience: 2,
            min_freq: 2,
            seed: 0,
            require_all_labels: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_freq: usize,
    pub epochs_run: usize,
    /// Epoch whose weights were kept (0 when no validation set was given).
    pub best_epoch: usize,
    pub train_examples: usize,
    pub validation_loss: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("label `{0}` does not occur in the training set")]
    MissingLabelInTrain(Label),
    #[error("all training texts are identical")]
    DegenerateData,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFormatError {
    #[error("failed to access model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported model format {format:?} version {version}")]
    Unsupported { format: String, version: u32 },
    #[error("model label order {0:?} differs from the canonical order")]
    LabelOrder(Vec<String>),
    #[error("inconsistent model: {0}")]
    Shape(String),
}

/// Trained (or hand-built) n-gram model. Weights are stored per label as
/// `num_features + 1` values with the bias last.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    features: Vec<String>,
    index: HashMap<String, usize>,
    weights: Vec<f64>,
    meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    labels: Vec<String>,
    ngram_orders: Vec<usize>,
    features: Vec<String>,
    weights: Vec<Vec<f64>>,
    training_meta: TrainingMeta,
}

fn ngrams(text: &str) -> impl Iterator<Item = String> + '_ {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let unigrams: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
    let bigrams: Vec<String> = tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect();
    unigrams.into_iter().chain(bigrams)
}

/// Sparse term-frequency vector, sorted by feature index.
pub fn featurize(text: &str, index: &HashMap<String, usize>) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for gram in ngrams(text) {
        if let Some(&i) = index.get(&gram) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    counts.into_iter().collect()
}

pub fn softmax(logits: &[f64; NUM_LABELS]) -> [f64; NUM_LABELS] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_LABELS];
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

impl NgramModel {
    /// Builds a model from explicit parts; `weights` is row-major
    /// `[label][feature]` with the bias as the last column.
    pub fn from_parts(features: Vec<String>, weights: Vec<f64>, meta: TrainingMeta) -> Result<Self, ModelFormatError> {
        let width = features.len() + 1;
        if weights.len() != NUM_LABELS * width {
            return Err(ModelFormatError::Shape(format!(
                "expected {} weights, got {}",
                NUM_LABELS * width,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ModelFormatError::Shape("non-finite weight".into()));
        }
        let index: HashMap<String, usize> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        if index.len() != features.len() {
            return Err(ModelFormatError::Shape("duplicate feature".into()));
        }
        Ok(NgramModel {
            features,
            index,
            weights,
            meta,
        })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_index(&self) -> &HashMap<String, usize> {
        &self.index
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    pub fn width(&self) -> usize {
        self.features.len() + 1
    }

    /// Position of weight `(label, feature)`; `feature == num_features()` is the bias.
    pub fn weight_position(&self, label: Label, feature: usize) -> usize {
        label.index() * self.width() + feature
    }

    /// Overwrites the weights with uniform values in `[-scale, scale]`.
    pub fn randomize(&mut self, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut self.weights {
            *w = rng.random_range(-scale..=scale);
        }
    }

    pub fn logits(&self, x: &[(usize, f64)]) -> [f64; NUM_LABELS] {
        let width = self.width();
        let mut out = [0.0; NUM_LABELS];
        for (l, o) in out.iter_mut().enumerate() {
            let row = &self.weights[l * width..(l + 1) * width];
            *o = row[width - 1] + x.iter().map(|(j, v)| row[*j] * v).sum::<f64>();
        }
        out
    }

    pub fn predict_proba(&self, text: &str) -> PerLabel<f64> {
        PerLabel(softmax(&self.logits(&featurize(text, &self.index))))
    }

    /// Mean cross-entropy of the model on featurized examples.
    pub fn loss(&self, batch: &[(Vec<(usize, f64)>, Label)]) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let total: f64 = batch
            .iter()
            .map(|(x, y)| {
                let z = self.logits(x);
                let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - z[y.index()]
            })
            .sum();
        total / batch.len() as f64
    }

    /// Adds the gradient of the mean cross-entropy over `batch` into `grad`
    /// and returns the touched positions.
    pub(crate) fn accumulate_gradient(
        &self,
        batch: &[&(Vec<(usize, f64)>, Label)],
        grad: &mut [f64],
        touched: &mut Vec<usize>,
    ) {
        let width = self.width();
        let scale = 1.0 / batch.len() as f64;
        for (x, y) in batch {
            let p = softmax(&self.logits(x));
            for (l, pl) in p.iter().enumerate() {
                let g = (pl - if l == y.index() { 1.0 } else { 0.0 }) * scale;
                let base = l * width;
                for (j, v) in x {
                    let pos = base + j;
                    if grad[pos] == 0.0 {
                        touched.push(pos);
                    }
                    grad[pos] += g * v;
                }
                let bias = base + width - 1;
                if grad[bias] == 0.0 {
                    touched.push(bias);
                }
                grad[bias] += g;
            }
        }
    }

    pub fn train(
        train: &[LabeledExample],
        validation: &[LabeledExample],
        config: &TrainConfig,
    ) -> Result<NgramModel, TrainError> {
        if train.is_empty() {
            return Err(TrainError::EmptyTrain);
        }
        if config.batch_size == 0 || config.max_epochs == 0 {
            return Err(TrainError::InvalidConfig("batch size and epochs must be positive".into()));
        }
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) || config.weight_decay < 0.0 {
            return Err(TrainError::InvalidConfig(format!(
                "learning rate {} / weight decay {}",
                config.learning_rate, config.weight_decay
            )));
        }
        if config.require_all_labels {
            if let Some(missing) = Label::ALL.into_iter().find(|l| train.iter().all(|e| e.label != *l)) {
                return Err(TrainError::MissingLabelInTrain(missing));
            }
        }
        if train.iter().all(|e| e.text == train[0].text) {
            return Err(TrainError::DegenerateData);
        }

        let mut frequency: BTreeMap<String, usize> = BTreeMap::new();
        for ex in train {
            for gram in ngrams(&ex.text) {
                *frequency.entry(gram).or_default() += 1;
            }
        }
        let features: Vec<String> = frequency
            .into_iter()
            .filter(|(_, n)| *n >= config.min_freq)
            .map(|(g, _)| g)
            .collect();

        let meta = TrainingMeta {
            seed: config.seed,
            learning_rate: config.learning_rate,
            weight_decay: config.weight_decay,
            batch_size: config.batch_size,
            max_epochs: config.max_epochs,
            patience: config.patience,
            min_freq: config.min_freq,
            epochs_run: 0,
            best_epoch: 0,
            train_examples: train.len(),
            validation_loss: Vec::new(),
        };
        let width = features.len() + 1;
        let mut model = NgramModel::from_parts(features, vec![0.0; NUM_LABELS * width], meta)
            .expect("consistent shape");

        let encode = |data: &[LabeledExample]| -> Vec<(Vec<(usize, f64)>, Label)> {
            data.iter()
                .map(|e| (featurize(&e.text, &model.index), e.label))
                .collect()
        };
        let train_x = encode(train);
        let val_x = encode(validation);

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..train_x.len()).collect();
        let mut grad = vec![0.0; model.weights.len()];
        let mut touched = Vec::new();
        let mut best: Option<(f64, Vec<f64>, usize)> = None;
        let mut stale = 0;

        for epoch in 1..=config.max_epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(config.batch_size) {
                let batch: Vec<_> = chunk.iter().map(|&i| &train_x[i]).collect();
                model.accumulate_gradient(&batch, &mut grad, &mut touched);
                if config.weight_decay > 0.0 {
                    let shrink = 1.0 - config.learning_rate * config.weight_decay;
                    for (pos, w) in model.weights.iter_mut().enumerate() {
                        if pos % width != width - 1 {
                            *w *= shrink;
                        }
                    }
                }
                for &pos in &touched {
                    model.weights[pos] -= config.learning_rate * grad[pos];
                    grad[pos] = 0.0;
                }
                touched.clear();
            }
            model.meta.epochs_run = epoch;

            if val_x.is_empty() {
                continue;
            }
            let loss = model.loss(&val_x);
            model.meta.validation_loss.push(loss);
            match &best {
                Some((best_loss, _, _)) if loss >= *best_loss => {
                    stale += 1;
                    if stale >= config.patience {
                        break;
                    }
                }
                _ => {
                    best = Some((loss, model.weights.clone(), epoch));
                    stale = 0;
                }
            }
        }
        if let Some((_, weights, epoch)) = best {
            model.weights = weights;
            model.meta.best_epoch = epoch;
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let width = self.width();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            labels: Label::wire_names(),
            ngram_orders: NGRAM_ORDERS.to_vec(),
            features: self.features.clone(),
            weights: self.weights.chunks(width).map(<[f64]>::to_vec).collect(),
            training_meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelFormatError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ModelFormatError::Unsupported {
                format: file.format,
                version: file.version,
            });
        }
        if file.labels != Label::wire_names() {
            return Err(ModelFormatError::LabelOrder(file.labels));
        }
        if file.ngram_orders != NGRAM_ORDERS {
            return Err(ModelFormatError::Shape(format!("ngram orders {:?}", file.ngram_orders)));
        }
        if file.weights.len() != NUM_LABELS {
            return Err(ModelFormatError::Shape(format!("{} weight rows", file.weights.len())));
        }
        let weights: Vec<f64> = file.weights.into_iter().flatten().collect();
        NgramModel::from_parts(file.features, weights, file.training_meta)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFormatError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelFormatError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Classifier for NgramModel {
    fn name(&self) -> String {
        "ngram".into()
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<Classification>, ClassifyError> {
        Ok(texts
            .par_iter()
            .map(|t| Classification::from_scores(self.predict_proba(t)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::classify;

    fn ex(text: &str, label: Label) -> LabeledExample {
        LabeledExample::new("toy", text, label)
    }

    fn separable() -> Vec<LabeledExample> {
        vec![
            ex("alpha beta", Label::Test),
            ex("beta gamma", Label::Test),
            ex("alpha gamma", Label::Test),
            ex("alpha beta gamma", Label::Test),
            ex("gamma alpha", Label::Test),
            ex("delta omega", Label::Scientific),
            ex("omega sigma", Label::Scientific),
            ex("delta sigma", Label::Scientific),
            ex("sigma delta omega", Label::Scientific),
            ex("omega delta", Label::Scientific),
        ]
    }

    fn two_label_config() -> TrainConfig {
        TrainConfig {
            require_all_labels: false,
            max_epochs: 30,
            batch_size: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_set_is_fit_exactly() {
        let data = separable();
        let model = NgramModel::train(&data, &[], &two_label_config()).unwrap();
        for e in &data {
            assert_eq!(Classification::from_scores(model.predict_proba(&e.text)).label, e.label);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let a = NgramModel::train(&data, &data[..2], &two_label_config()).unwrap();
        let b = NgramModel::train(&data, &data[..2], &two_label_config()).unwrap();
        assert_eq!(a.weights(), b.weights());
        let c = NgramModel::train(&data, &data[..2], &TrainConfig { seed: 1, ..two_label_config() }).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn patience_stops_on_rising_validation_loss() {
        let data = separable();
        // validation labels are flipped, so fitting the training data only hurts
        let flipped: Vec<_> = data
            .iter()
            .map(|e| {
                let label = if e.label == Label::Test { Label::Scientific } else { Label::Test };
                ex(&e.text, label)
            })
            .collect();
        let model = NgramModel::train(&data, &flipped, &two_label_config()).unwrap();
        let losses = &model.meta().validation_loss;
        assert!(losses.windows(2).all(|w| w[1] > w[0]), "{losses:?}");
        assert_eq!(model.meta().epochs_run, 3);
        assert_eq!(model.meta().best_epoch, 1);
    }

    #[test]
    fn hand_scored_oracle_matches() {
        let features = vec!["bug".to_string(), "test".to_string()];
        let mut weights = vec![0.0; 6 * 3];
        weights[9] = 2.0; // Test, "bug"
        weights[10] = 1.5; // Test, "test"
        weights[5] = 0.7; // CodeDesign bias
        let model = NgramModel::from_parts(features, weights.clone(), TrainingMeta::default()).unwrap();

        let texts = ["bug bug".to_string(), "test".to_string(), "nothing here".to_string()];
        let out = classify(&texts, &model).unwrap();
        // independent scoring: logits_l = sum_j w[l][j] * count_j + bias_l
        let counts = [[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        for (c, out) in counts.iter().zip(&out) {
            let logits: Vec<f64> = (0..6)
                .map(|l| weights[l * 3] * c[0] + weights[l * 3 + 1] * c[1] + weights[l * 3 + 2])
                .collect();
            let z: f64 = logits.iter().map(|v| v.exp()).sum();
            let probs: Vec<f64> = logits.iter().map(|v| v.exp() / z).collect();
            let argmax = (0..6).fold(0, |b, i| if probs[i] > probs[b] { i } else { b });
            assert_eq!(out.label, Label::ALL[argmax]);
            for (l, p) in probs.iter().enumerate() {
                assert!((out.scores.0[l] - p).abs() < 1e-12);
            }
        }
        assert_eq!(out[0].label, Label::Test);
        assert_eq!(out[2].label, Label::CodeDesign);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            NgramModel::train(&[], &[], &TrainConfig::default()),
            Err(TrainError::EmptyTrain)
        ));
        assert!(matches!(
            NgramModel::train(&separable(), &[], &TrainConfig::default()),
            Err(TrainError::MissingLabelInTrain(Label::NonSatd))
        ));
        let same = vec![ex("x y", Label::Test), ex("x y", Label::Scientific)];
        assert!(matches!(
            NgramModel::train(&same, &[], &two_label_config()),
            Err(TrainError::DegenerateData)
        ));
    }

    #[test]
    fn vocabulary_respects_min_freq() {
        let model = NgramModel::train(&separable(), &[], &two_label_config()).unwrap();
        assert!(model.features().contains(&"alpha".to_string()));
        assert!(model.features().contains(&"alpha beta".to_string()));
        // "omega sigma" occurs once
        assert!(!model.features().contains(&"omega sigma".to_string()));
        let mut sorted = model.features().to_vec();
        sorted.sort();
        assert_eq!(sorted, model.features());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let model = NgramModel::train(&separable(), &separable()[..3], &two_label_config()).unwrap();
        let back = NgramModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);

        let tampered = model.to_json().replace("\"non-satd\"", "\"nonsatd\"");
        assert!(matches!(NgramModel::from_json(&tampered), Err(ModelFormatError::LabelOrder(_))));
        let tampered = model.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(NgramModel::from_json(&tampered), Err(ModelFormatError::Unsupported { .. })));
    }
}
