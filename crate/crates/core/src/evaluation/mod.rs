//! Classification metrics and the intra-project and cross-project
//! evaluation campaigns.

mod metrics;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify, Classifier, ClassifyError, NgramModel, TrainConfig, TrainError};
use crate::corpus::{
    augment_minority, split, stratified_group_kfold, AugmentError, CorpusError, LabeledExample,
    ParaphraseProvider, SplitSpec,
};
use crate::label::Label;

pub use metrics::{confusion, metrics, ConfusionMatrix, LabelMetrics, MetricsReport, TABLE_LABEL_ORDER};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

/// Learning rates crossed with weight decays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterGrid {
    pub learning_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
}

impl HyperparameterGrid {
    /// Step sizes suited to the n-gram model's unnormalized count features.
    pub fn native() -> Self {
        HyperparameterGrid {
            learning_rates: vec![0.05, 0.1, 0.5],
            weight_decays: vec![0.0, 0.01, 0.1],
        }
    }

    /// The transformer fine-tuning grid, for backends trained elsewhere.
    pub fn transformer() -> Self {
        HyperparameterGrid {
            learning_rates: vec![1e-5, 5e-5, 1e-4],
            weight_decays: vec![0.0, 0.01, 0.1],
        }
    }

    /// All (learning rate, weight decay) pairs, learning rate major.
    pub fn runs(&self) -> Vec<(f64, f64)> {
        self.learning_rates
            .iter()
            .flat_map(|lr| self.weight_decays.iter().map(move |wd| (*lr, *wd)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub validation_weighted_f1: f64,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub model: NgramModel,
    pub runs: Vec<GridRun>,
    /// Index into `runs` of the kept model.
    pub selected: usize,
}

/// How predictions are produced for an evaluation.
pub enum Backend<'a> {
    /// Train an n-gram model per split, optionally grid-searching.
    Ngram {
        config: TrainConfig,
        grid: Option<HyperparameterGrid>,
    },
    /// Use an already available classifier as is.
    Fixed(&'a dyn Classifier),
}

pub fn evaluate_classifier(examples: &[LabeledExample], backend: &dyn Classifier) -> Result<(ConfusionMatrix, MetricsReport), EvalError> {
    let texts: Vec<String> = examples.iter().map(|e| e.text.clone()).collect();
    let truth: Vec<Label> = examples.iter().map(|e| e.label).collect();
    let predicted: Vec<Label> = classify(&texts, backend)?.into_iter().map(|c| c.label).collect();
    let cm = confusion(&truth, &predicted)?;
    let report = metrics(&cm)?;
    Ok((cm, report))
}

/// Trains one model per grid point and keeps the one with the highest
/// validation weighted F1; ties keep the earlier grid point.
pub fn grid_search(
    train: &[LabeledExample],
    validation: &[LabeledExample],
    base: &TrainConfig,
    grid: &HyperparameterGrid,
) -> Result<GridOutcome, EvalError> {
    if validation.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut best: Option<(usize, NgramModel)> = None;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut runs = Vec::new();
    for (lr, wd) in grid.runs() {
        let config = TrainConfig {
            learning_rate: lr,
            weight_decay: wd,
            ..base.clone()
        };
        let model = NgramModel::train(train, validation, &config)?;
        let (_, report) = evaluate_classifier(validation, &model)?;
        log::info!("grid lr={lr} wd={wd}: validation weighted F1 {:.4}", report.weighted_f1);
        runs.push(GridRun {
            learning_rate: lr,
            weight_decay: wd,
            validation_weighted_f1: report.weighted_f1,
        });
        if report.weighted_f1 > best_f1 {
            best_f1 = report.weighted_f1;
            best = Some((runs.len() - 1, model));
        }
    }
    let (selected, model) = best.ok_or(EvalError::Empty)?;
    Ok(GridOutcome { model, runs, selected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraProjectResult {
    pub backend: String,
    pub seed: u64,
    pub sizes: SplitSizes,
    /// Hyperparameters of the evaluated model, when one was trained.
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub grid: Vec<GridRun>,
    /// Paraphrases added to the training split.
    #[serde(default)]
    pub augmented: usize,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

/// Paraphrase every training example of one label before fitting.
pub struct TrainAugmentation<'a> {
    pub label: Label,
    pub provider: &'a dyn ParaphraseProvider,
}

/// Everything an intra-project run produces, including the trained model.
pub struct IntraProjectRun {
    pub result: IntraProjectResult,
    pub model: Option<NgramModel>,
}

/// Splits the pooled examples, trains on the training split with the
/// validation split for early stopping (and grid selection) and evaluates
/// once on the test split.
pub fn run_intra_project(examples: &[LabeledExample], spec: &SplitSpec, backend: &Backend) -> Result<IntraProjectRun, EvalError> {
    run_intra_project_augmented(examples, spec, backend, None)
}

/// As [`run_intra_project`], augmenting only the training split so that no
/// paraphrase leaks into validation or test.
pub fn run_intra_project_augmented(
    examples: &[LabeledExample],
    spec: &SplitSpec,
    backend: &Backend,
    augmentation: Option<&TrainAugmentation>,
) -> Result<IntraProjectRun, EvalError> {
    let mut parts = split(examples, spec)?;
    let sizes = SplitSizes {
        train: parts.train.len(),
        validation: parts.validation.len(),
        test: parts.test.len(),
    };
    let mut augmented = 0;
    if let Some(aug) = augmentation {
        let before = parts.train.len();
        parts.train = augment_minority(&parts.train, aug.label, aug.provider)?.examples;
        augmented = parts.train.len() - before;
        log::info!("added {augmented} paraphrases of {} to the training split", aug.label);
    }
    let (model, grid) = match backend {
        Backend::Ngram { config, grid: Some(grid) } => {
            let outcome = grid_search(&parts.train, &parts.validation, config, grid)?;
            (Some(outcome.model), outcome.runs)
        }
        Backend::Ngram { config, grid: None } => {
            (Some(NgramModel::train(&parts.train, &parts.validation, config)?), Vec::new())
        }
        Backend::Fixed(_) => (None, Vec::new()),
    };
    let classifier: &dyn Classifier = match (&model, backend) {
        (Some(m), _) => m,
        (None, Backend::Fixed(c)) => *c,
        (None, Backend::Ngram { .. }) => unreachable!("n-gram backends always train"),
    };
    if let Some(m) = &model {
        log::info!(
            "selected learning rate {} weight decay {} (best epoch {})",
            m.meta().learning_rate,
            m.meta().weight_decay,
            m.meta().best_epoch
        );
    }
    let (cm, report) = evaluate_classifier(&parts.test, classifier)?;
    Ok(IntraProjectRun {
        result: IntraProjectResult {
            backend: classifier.name(),
            seed: spec.seed,
            sizes,
            learning_rate: model.as_ref().map(|m| m.meta().learning_rate),
            weight_decay: model.as_ref().map(|m| m.meta().weight_decay),
            grid,
            augmented,
            confusion: cm,
            report,
        },
        model,
    })
}

pub const CROSS_PROJECT_MAX_EPOCHS: usize = 5;
pub const CROSS_PROJECT_PATIENCE: usize = 2;
pub const CROSS_PROJECT_VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_projects: Vec<String>,
    pub train_examples: usize,
    pub test_examples: usize,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossProjectResult {
    pub backend: String,
    pub k: usize,
    pub seed: u64,
    pub per_fold: Vec<FoldReport>,
    /// Element-wise mean of the per-fold reports.
    pub averaged: MetricsReport,
}

/// Shuffles the fold's training examples and holds out 10% (at least one
/// example when there are two or more) for early stopping.
fn carve_validation(train: Vec<LabeledExample>, seed: u64) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut train = train;
    train.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut n = (train.len() as f64 * CROSS_PROJECT_VALIDATION_FRACTION).floor() as usize;
    if n == 0 && train.len() >= 2 {
        n = 1;
    }
    let validation = train.split_off(train.len() - n);
    (train, validation)
}

/// Evaluates on each fold of a stratified group k-fold over projects, so no
/// project contributes to both training and testing of the same fold.
pub fn run_cross_project(examples: &[LabeledExample], k: usize, seed: u64, backend: &Backend) -> Result<CrossProjectResult, EvalError> {
    let assignment = stratified_group_kfold(examples, k, seed)?;
    let folds: Vec<Result<(FoldReport, String), EvalError>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = assignment.partition(examples, fold);
            let train: Vec<LabeledExample> = train.into_iter().cloned().collect();
            let test: Vec<LabeledExample> = test.into_iter().cloned().collect();
            let train_examples = train.len();
            let model = match backend {
                Backend::Ngram { config, .. } => {
                    let config = TrainConfig {
                        max_epochs: config.max_epochs.min(CROSS_PROJECT_MAX_EPOCHS),
                        patience: CROSS_PROJECT_PATIENCE,
                        ..config.clone()
                    };
                    let (fit, validation) = carve_validation(train, seed.wrapping_add(fold as u64));
                    Some(NgramModel::train(&fit, &validation, &config)?)
                }
                Backend::Fixed(_) => None,
            };
            let classifier: &dyn Classifier = match (&model, backend) {
                (Some(m), _) => m,
                (None, Backend::Fixed(c)) => *c,
                (None, Backend::Ngram { .. }) => unreachable!("n-gram backends always train"),
            };
            let (cm, report) = evaluate_classifier(&test, classifier)?;
            Ok((
                FoldReport {
                    fold,
                    test_projects: assignment.test_projects(fold).into_iter().map(str::to_string).collect(),
                    train_examples,
                    test_examples: test.len(),
                    confusion: cm,
                    report,
                },
                classifier.name(),
            ))
        })
        .collect();
    let mut per_fold = Vec::with_capacity(k);
    let mut name = String::new();
    for fold in folds {
        let (report, backend_name) = fold?;
        name = backend_name;
        per_fold.push(report);
    }
    let reports: Vec<MetricsReport> = per_fold.iter().map(|f| f.report.clone()).collect();
    let averaged = MetricsReport::average(&reports).ok_or(EvalError::Empty)?;
    Ok(CrossProjectResult {
        backend: name,
        k,
        seed,
        per_fold,
        averaged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::PatternRuleSet;

    /// Six well separated vocabularies, one per label.
    pub(crate) fn separable(projects: usize, per_label: usize) -> Vec<LabeledExample> {
        let words = [
            ["returns", "index", "value"],
            ["refactor", "messy", "duplicate"],
            ["docstring", "explain", "parameters"],
            ["coverage", "assert", "mock"],
            ["support", "feature", "option"],
            ["approximation", "equation", "solver"],
        ];
        let mut out = Vec::new();
        for p in 0..projects {
            for (l, w) in words.iter().enumerate() {
                for i in 0..per_label {
                    let text = format!("{} {} {}", w[i % 3], w[(i + 1) % 3], w[(i + p) % 3]);
                    out.push(LabeledExample::new(format!("proj{p:02}"), text, Label::ALL[l]));
                }
            }
        }
        out
    }

    #[test]
    fn grid_has_nine_runs() {
        assert_eq!(HyperparameterGrid::native().runs().len(), 9);
        let t = HyperparameterGrid::transformer().runs();
        assert_eq!(t.len(), 9);
        assert_eq!(t[0], (1e-5, 0.0));
        assert_eq!(t[8], (1e-4, 0.1));
    }

    #[test]
    fn intra_project_on_separable_data_is_perfect() {
        let data = separable(3, 10);
        let backend = Backend::Ngram {
            config: TrainConfig::default(),
            grid: None,
        };
        let run = run_intra_project(&data, &SplitSpec::standard(1), &backend).unwrap();
        assert_eq!(run.result.report.weighted_f1, 1.0);
        let again = run_intra_project(&data, &SplitSpec::standard(1), &backend).unwrap();
        assert_eq!(again.result, run.result);
    }

    #[test]
    fn augmentation_touches_only_the_training_split() {
        let data = separable(3, 10);
        let backend = Backend::Ngram {
            config: TrainConfig::default(),
            grid: None,
        };
        let spec = SplitSpec::standard(4);
        let plain = run_intra_project(&data, &spec, &backend).unwrap().result;
        let aug = TrainAugmentation {
            label: Label::Scientific,
            provider: &crate::corpus::RotationParaphraser,
        };
        let run = run_intra_project_augmented(&data, &spec, &backend, Some(&aug)).unwrap().result;
        let sci_in_train = split(&data, &spec)
            .unwrap()
            .train
            .iter()
            .filter(|e| e.label == Label::Scientific)
            .count();
        assert!(run.augmented > 0 && run.augmented <= sci_in_train);
        assert_eq!(run.sizes, plain.sizes);
        assert_eq!(run.confusion.total(), plain.confusion.total());
    }

    #[test]
    fn grid_search_selects_best_validation_run() {
        let data = separable(3, 10);
        let backend = Backend::Ngram {
            config: TrainConfig::default(),
            grid: Some(HyperparameterGrid::native()),
        };
        let run = run_intra_project(&data, &SplitSpec::standard(2), &backend).unwrap();
        let grid = &run.result.grid;
        assert_eq!(grid.len(), 9);
        let best = grid.iter().map(|g| g.validation_weighted_f1).fold(f64::MIN, f64::max);
        let first_best = grid.iter().find(|g| g.validation_weighted_f1 == best).unwrap();
        assert_eq!(run.result.learning_rate, Some(first_best.learning_rate));
        assert_eq!(run.result.weight_decay, Some(first_best.weight_decay));
    }

    #[test]
    fn symmetric_projects_give_identical_folds() {
        let mut data = Vec::new();
        for p in ["a", "b"] {
            for (t, l) in [("todo add", Label::Requirement), ("hack here", Label::CodeDesign), ("plain", Label::NonSatd)] {
                data.push(LabeledExample::new(p, t, l));
            }
        }
        let rules = PatternRuleSet::default();
        let result = run_cross_project(&data, 2, 0, &Backend::Fixed(&rules)).unwrap();
        assert_eq!(result.per_fold[0].report, result.per_fold[1].report);
        assert_eq!(result.averaged, result.per_fold[0].report);
    }

    #[test]
    fn cross_project_is_sound_and_averaged() {
        let data = separable(6, 6);
        let backend = Backend::Ngram {
            config: TrainConfig::default(),
            grid: None,
        };
        let result = run_cross_project(&data, 3, 7, &backend).unwrap();
        assert_eq!(result.per_fold.len(), 3);
        let n = result.per_fold.len() as f64;
        let mean = result.per_fold.iter().map(|f| f.report.macro_f1).sum::<f64>() / n;
        assert!((result.averaged.macro_f1 - mean).abs() < 1e-9);
        let assignment = stratified_group_kfold(&data, 3, 7).unwrap();
        for fold in &result.per_fold {
            let (train, test) = assignment.partition(&data, fold.fold);
            assert!(test.iter().all(|e| fold.test_projects.contains(&e.project)));
            assert!(train.iter().all(|e| !fold.test_projects.contains(&e.project)));
            assert_eq!(fold.test_examples, test.len());
        }
        let again = run_cross_project(&data, 3, 7, &backend).unwrap();
        assert_eq!(
            serde_json::to_string(&again).unwrap(),
            serde_json::to_string(&result).unwrap()
        );
    }

    #[test]
    fn too_many_folds_is_rejected() {
        let data = separable(4, 2);
        let rules = PatternRuleSet::default();
        let err = run_cross_project(&data, 30, 0, &Backend::Fixed(&rules)).unwrap_err();
        assert!(matches!(err, EvalError::Corpus(CorpusError::TooFewGroups { k: 30, got: 4 })));
    }

    #[test]
    fn validation_carve_is_ten_percent() {
        let data = separable(1, 10);
        let (fit, val) = carve_validation(data.clone(), 3);
        assert_eq!((fit.len(), val.len()), (54, 6));
        let (fit, val) = carve_validation(data[..3].to_vec(), 3);
        assert_eq!((fit.len(), val.len()), (2, 1));
    }
}
