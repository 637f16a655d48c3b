//! `--config` file: TOML mirroring the command-line flags.
//!
//! ```toml
//! seed = 7
//! format = "json"            # json | csv | md
//! backend = "ngram:model.json"
//! endpoint = "http://localhost:8000"
//! jobs = 4
//! stop_words = "none"        # or "file:PATH"
//! dataset = ["a.csv", "b.jsonl"]
//!
//! [train]
//! grid = true
//! augment_label = "scientific"
//! paraphraser = "rotation"
//! learning_rate = 0.5
//! out = "model-dir"
//!
//! [evaluate]
//! mode = "cross"
//! k = 5
//!
//! [analyze]
//! domain = "Physics"
//! criteria = "criteria.json"
//! metadata = "metadata.json"
//! enforce_criteria = false
//! render = "md"
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context as _;
use satd_core::preprocess::StopWordPolicy;
use serde::Deserialize;

use crate::{BackendSpec, Context, Format, GlobalArgs, HyperArgs, Mode, Render, DEFAULT_SEED};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub backend: Option<String>,
    pub endpoint: Option<String>,
    pub jobs: Option<usize>,
    pub stop_words: Option<String>,
    #[serde(default)]
    pub dataset: Vec<PathBuf>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
}

/// Training hyperparameters after merging flags and file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hyper {
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub min_freq: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub grid: bool,
    pub augment_label: Option<String>,
    pub paraphraser: Option<String>,
    pub paraphrase_model: Option<String>,
    pub out: Option<PathBuf>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub min_freq: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    #[serde(default)]
    pub grid: bool,
    pub out: Option<PathBuf>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub min_freq: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub domain: Option<String>,
    pub criteria: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub github_api: Option<String>,
    #[serde(default)]
    pub enforce_criteria: bool,
    pub render: Option<Render>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

macro_rules! overlay_hyper {
    ($section:ty) => {
        impl $section {
            /// Hyperparameters with flags taking precedence over this section.
            pub fn hyper(&self, flags: &HyperArgs) -> Hyper {
                Hyper {
                    learning_rate: flags.learning_rate.or(self.learning_rate),
                    weight_decay: flags.weight_decay.or(self.weight_decay),
                    max_epochs: flags.max_epochs.or(self.max_epochs),
                    batch_size: flags.batch_size.or(self.batch_size),
                    patience: flags.patience.or(self.patience),
                    min_freq: flags.min_freq.or(self.min_freq),
                }
            }
        }
    };
}

overlay_hyper!(TrainSection);
overlay_hyper!(EvaluateSection);

pub fn parse_stop_words(spec: &str) -> anyhow::Result<StopWordPolicy> {
    match spec.split_once(':') {
        None if spec == "none" => Ok(StopWordPolicy::None),
        Some(("file", path)) => StopWordPolicy::from_file(Path::new(path))
            .with_context(|| format!("reading stop-word list {path}")),
        _ => anyhow::bail!("invalid stop-word policy `{spec}`; expected `none` or `file:PATH`"),
    }
}

pub(crate) fn resolve(flags: &GlobalArgs) -> anyhow::Result<Context> {
    let file = match &flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let backend = match (&flags.backend, &file.backend) {
        (Some(b), _) => Some(b.clone()),
        (None, Some(s)) => Some(s.parse::<BackendSpec>().map_err(anyhow::Error::msg).context("`backend` in config file")?),
        (None, None) => None,
    };
    let stop_words = match flags.stop_words.as_ref().or(file.stop_words.as_ref()) {
        Some(spec) => parse_stop_words(spec)?,
        None => StopWordPolicy::None,
    };
    Ok(Context {
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        format: flags.format.or(file.format).unwrap_or(Format::Json),
        backend,
        endpoint: flags.endpoint.clone().or_else(|| file.endpoint.clone()),
        jobs: flags.jobs.or(file.jobs),
        stop_words,
        file,
    })
}
