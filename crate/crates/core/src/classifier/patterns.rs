use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Classification, Classifier, ClassifyError};
use crate::label::Label;
use crate::preprocess::{normalize, StopWordPolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRule {
    pub pattern: String,
    pub label: Label,
}

/// Ordered keyword rules; the first rule whose phrase occurs in the text on
/// word boundaries decides the label, otherwise `NonSatd`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRuleSet {
    rules: Vec<PatternRule>,
}

#[derive(Debug, thiserror::Error)]
pub enum PatternError {
    #[error("pattern {index} ({pattern:?}) must be non-empty normalized lowercase text")]
    InvalidPattern { index: usize, pattern: String },
    #[error("failed to read rule file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid rule file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Placeholder keyword list, not a curated pattern catalogue.
const DEFAULT_RULES: &[(&str, Label)] = &[
    ("todo", Label::Requirement),
    ("fixme", Label::CodeDesign),
    ("hack", Label::CodeDesign),
    ("xxx", Label::CodeDesign),
    ("workaround", Label::CodeDesign),
    ("does not work", Label::CodeDesign),
    ("not correct", Label::Scientific),
];

impl Default for PatternRuleSet {
    fn default() -> Self {
        PatternRuleSet {
            rules: DEFAULT_RULES
                .iter()
                .map(|(p, l)| PatternRule {
                    pattern: p.to_string(),
                    label: *l,
                })
                .collect(),
        }
    }
}

impl PatternRuleSet {
    pub fn new(rules: Vec<PatternRule>) -> Result<Self, PatternError> {
        for (index, rule) in rules.iter().enumerate() {
            if normalize(&rule.pattern, &StopWordPolicy::None).as_deref() != Some(rule.pattern.as_str()) {
                return Err(PatternError::InvalidPattern {
                    index,
                    pattern: rule.pattern.clone(),
                });
            }
        }
        Ok(PatternRuleSet { rules })
    }

    /// Reads `{"rules": [{"pattern": "...", "label": "..."}]}`.
    pub fn load(path: &Path) -> Result<Self, PatternError> {
        #[derive(Deserialize)]
        struct File {
            rules: Vec<PatternRule>,
        }
        let file: File = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::new(file.rules)
    }

    pub fn rules(&self) -> &[PatternRule] {
        &self.rules
    }

    pub fn label_of(&self, text: &str) -> Label {
        let padded = format!(" {text} ");
        self.rules
            .iter()
            .find(|r| padded.contains(&format!(" {} ", r.pattern)))
            .map_or(Label::NonSatd, |r| r.label)
    }
}

impl Classifier for PatternRuleSet {
    fn name(&self) -> String {
        "patterns".into()
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<Classification>, ClassifyError> {
        Ok(texts
            .iter()
            .map(|t| Classification::one_hot(self.label_of(t)))
            .collect())
    }
}
