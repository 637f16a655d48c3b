//! Labeled datasets: loading, merging, splitting, project folds and
//! minority-class augmentation.

mod augment;
mod folds;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::label::{Label, PerLabel};
use crate::preprocess::{normalize, StopWordPolicy};

pub use augment::{
    augment_minority, AugmentError, Augmentation, ChatParaphraser, ParaphraseProvider,
    PromptTemplate, ProviderError, RotationParaphraser,
};
pub use folds::{
    fold_label_deviations, label_proportions, round_robin_assignment, stratified_group_kfold,
    FoldAssignment,
};

/// One row of a training corpus. `text` is already normalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledExample {
    pub project: String,
    pub text: String,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(project: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        LabeledExample {
            project: project.into(),
            text: text.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub counts: PerLabel<u64>,
    pub total: u64,
}

impl DatasetSummary {
    pub fn of(examples: &[LabeledExample]) -> Self {
        let mut counts = PerLabel::<u64>::default();
        for ex in examples {
            counts[ex.label] += 1;
        }
        DatasetSummary {
            counts,
            total: examples.len() as u64,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed row on line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("unknown label `{value}` on line {line}")]
    UnknownLabel { line: u64, value: String },
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("need at least {needed} examples, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("need at least {k} distinct projects, got {got}")]
    TooFewGroups { k: usize, got: usize },
    #[error("invalid split fractions: {0}")]
    InvalidSplit(String),
    #[error("k must be positive")]
    ZeroFolds,
    #[error("cannot infer dataset format of {0}; use .csv or .jsonl")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Ok(DatasetFormat::Csv),
            Some("jsonl") | Some("ndjson") => Ok(DatasetFormat::Jsonl),
            _ => Err(CorpusError::UnknownFormat(path.display().to_string())),
        }
    }
}

/// Result of loading a dataset file.
#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub examples: Vec<LabeledExample>,
    /// Line numbers of rows whose text normalized to nothing.
    pub dropped_lines: Vec<u64>,
}

const COLUMNS: [&str; 3] = ["project", "text", "label"];

/// Loads a `{project, text, label}` dataset, normalizing every text.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<LoadedDataset, CorpusError> {
    match format {
        DatasetFormat::Csv => load_csv(path),
        DatasetFormat::Jsonl => load_jsonl(path),
    }
}

fn push_row(
    out: &mut LoadedDataset,
    line: u64,
    project: &str,
    text: &str,
    label: &str,
) -> Result<(), CorpusError> {
    let label = Label::from_wire(label.trim()).ok_or_else(|| CorpusError::UnknownLabel {
        line,
        value: label.to_string(),
    })?;
    match normalize(text, &StopWordPolicy::None) {
        Some(text) => out.examples.push(LabeledExample::new(project, text, label)),
        None => out.dropped_lines.push(line),
    }
    Ok(())
}

fn load_csv(path: &Path) -> Result<LoadedDataset, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let mut index = [0usize; 3];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(CorpusError::MissingColumn(name))?;
    }
    let mut out = LoadedDataset::default();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(index[i]).unwrap_or_default();
        push_row(&mut out, line, field(0), field(1), field(2))?;
    }
    Ok(out)
}

fn csv_error(err: csv::Error) -> CorpusError {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => CorpusError::Io(io),
        other => CorpusError::MalformedRow {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn load_jsonl(path: &Path) -> Result<LoadedDataset, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = LoadedDataset::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRow {
                line: line_no,
                message: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| CorpusError::MalformedRow {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let mut fields = [""; 3];
        for (slot, name) in fields.iter_mut().zip(COLUMNS) {
            let v = obj.get(name).ok_or(CorpusError::MissingColumn(name))?;
            *slot = v.as_str().ok_or_else(|| CorpusError::MalformedRow {
                line: line_no,
                message: format!("`{name}` must be a string"),
            })?;
        }
        push_row(&mut out, line_no, fields[0], fields[1], fields[2])?;
    }
    Ok(out)
}

/// Writes examples as CSV with the loader's column layout.
pub fn write_csv(path: &Path, examples: &[LabeledExample]) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer.write_record(COLUMNS).map_err(csv_error)?;
    for ex in examples {
        writer
            .write_record([ex.project.as_str(), ex.text.as_str(), ex.label.wire_name()])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Concatenates datasets, dropping exact `(project, text, label)` duplicates.
pub fn merge(datasets: &[Vec<LabeledExample>]) -> (Vec<LabeledExample>, DatasetSummary) {
    let mut seen = HashSet::new();
    let merged: Vec<LabeledExample> = datasets
        .iter()
        .flatten()
        .filter(|ex| seen.insert((*ex).clone()))
        .cloned()
        .collect();
    let summary = DatasetSummary::of(&merged);
    (merged, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// 80/10/10.
    pub fn standard(seed: u64) -> Self {
        SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            test_fraction: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fractions = [self.train_fraction, self.validation_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(CorpusError::InvalidSplit(format!(
                "each fraction must lie in (0,1): {fractions:?}"
            )));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplit(format!("fractions sum to {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

pub const MIN_SPLIT_EXAMPLES: usize = 10;

/// Seeded shuffle followed by a floor-sized validation/test cut; the
/// remainder goes to train.
pub fn split(examples: &[LabeledExample], spec: &SplitSpec) -> Result<Split, CorpusError> {
    spec.validate()?;
    if examples.len() < MIN_SPLIT_EXAMPLES {
        return Err(CorpusError::TooFewExamples {
            needed: MIN_SPLIT_EXAMPLES,
            got: examples.len(),
        });
    }
    let n = examples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));

    let floor = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
    let n_validation = floor(spec.validation_fraction);
    let n_test = floor(spec.test_fraction);
    let n_train = n - n_validation - n_test;

    let take = |range: std::ops::Range<usize>| -> Vec<LabeledExample> {
        order[range].iter().map(|&i| examples[i].clone()).collect()
    };
    Ok(Split {
        train: take(0..n_train),
        validation: take(n_train..n_train + n_validation),
        test: take(n_train + n_validation..n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ex(project: &str, text: &str, label: Label) -> LabeledExample {
        LabeledExample::new(project, text, label)
    }

    fn numbered(n: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|i| ex("p", &format!("comment {}", "x".repeat(i + 1)), Label::NonSatd))
            .collect()
    }

    #[test]
    fn load_csv_fixture_drops_empty_text() {
        let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(
            file,
            "project,text,label\nastropy,TODO later,requirement\nastropy,12345,non-satd\n\
             numpy,\"Hack: works, sort of\",code-design\nnumpy,fix docs!,documentation\n\
             scipy,add a test,test"
        )
        .unwrap();
        let loaded = load_dataset(file.path(), DatasetFormat::Csv).unwrap();
        assert_eq!(loaded.examples.len(), 4);
        assert_eq!(loaded.dropped_lines, vec![3]);
        assert_eq!(loaded.examples[0], ex("astropy", "todo later", Label::Requirement));
        assert_eq!(loaded.examples[1].text, "hack works sort of");
    }

    #[test]
    fn load_rejects_unknown_label_and_missing_column() {
        let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(file, "project,text,label\np,hello,design").unwrap();
        let err = load_dataset(file.path(), DatasetFormat::Csv).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownLabel { line: 2, ref value } if value == "design"));

        let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(file, "project,comment,label\np,hello,test").unwrap();
        let err = load_dataset(file.path(), DatasetFormat::Csv).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn("text")));

        let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(file, "project,text,label\np,hello,test,extra").unwrap();
        let err = load_dataset(file.path(), DatasetFormat::Csv).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn load_jsonl() {
        let mut file = tempfile::Builder::new().suffix(".jsonl").tempfile().unwrap();
        writeln!(
            file,
            "{{\"project\":\"a\",\"text\":\"Not converged!\",\"label\":\"scientific\"}}\n\n\
             {{\"project\":\"a\",\"text\":\"ok\",\"label\":\"non-satd\"}}"
        )
        .unwrap();
        let loaded = load_dataset(file.path(), DatasetFormat::Jsonl).unwrap();
        assert_eq!(loaded.examples[0], ex("a", "not converged!", Label::Scientific));
        assert_eq!(loaded.examples.len(), 2);

        let mut file = tempfile::Builder::new().suffix(".jsonl").tempfile().unwrap();
        writeln!(file, "{{\"project\":\"a\",\"label\":\"test\"}}").unwrap();
        assert!(matches!(
            load_dataset(file.path(), DatasetFormat::Jsonl),
            Err(CorpusError::MissingColumn("text"))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = vec![ex("a", "say \"hi\" it's ok", Label::Test), ex("b", "x", Label::NonSatd)];
        write_csv(&path, &data).unwrap();
        assert_eq!(load_dataset(&path, DatasetFormat::Csv).unwrap().examples, data);
    }

    #[test]
    fn merge_removes_exact_duplicates() {
        let a = vec![ex("p", "a", Label::Test), ex("p", "b", Label::Test)];
        let b = vec![ex("p", "a", Label::Test), ex("q", "a", Label::Test), ex("p", "a", Label::Requirement)];
        let (merged, summary) = merge(&[a.clone(), b]);
        assert_eq!(merged.len(), 4);
        assert_eq!(summary.counts[Label::Test], 3);
        assert_eq!(summary.total, 4);

        let (empty, summary) = merge(&[vec![], vec![]]);
        assert!(empty.is_empty());
        assert_eq!(summary, DatasetSummary::default());

        let (_, once) = merge(&[a.clone()]);
        let (_, twice) = merge(&[a.clone(), a]);
        assert_eq!(once, twice);
    }

    #[test]
    fn split_sizes() {
        let s = split(&numbered(100), &SplitSpec::standard(1)).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (80, 10, 10));
        let s = split(&numbered(101), &SplitSpec::standard(1)).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (81, 10, 10));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let data = numbered(57);
        let a = split(&data, &SplitSpec::standard(9)).unwrap();
        let b = split(&data, &SplitSpec::standard(9)).unwrap();
        assert_eq!(a, b);
        let c = split(&data, &SplitSpec::standard(10)).unwrap();
        assert_ne!(a.train, c.train);

        let mut all: Vec<_> = a.train.iter().chain(&a.validation).chain(&a.test).cloned().collect();
        all.sort_by(|x, y| x.text.cmp(&y.text));
        let mut expected = data.clone();
        expected.sort_by(|x, y| x.text.cmp(&y.text));
        assert_eq!(all, expected);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split(&numbered(9), &SplitSpec::standard(0)),
            Err(CorpusError::TooFewExamples { needed: 10, got: 9 })
        ));
        let bad = SplitSpec {
            train_fraction: 0.7,
            ..SplitSpec::standard(0)
        };
        assert!(matches!(split(&numbered(20), &bad), Err(CorpusError::InvalidSplit(_))));
    }
}
