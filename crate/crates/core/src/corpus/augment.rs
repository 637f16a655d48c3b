//! Paraphrase-based augmentation of a minority label.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::LabeledExample;
use crate::label::Label;
use crate::preprocess::{normalize, StopWordPolicy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("paraphrase provider unavailable: {0}")]
    Unavailable(String),
    #[error("paraphrase provider rejected the text: {0}")]
    Rejected(String),
}

/// Produces one meaning-preserving rewrite of a comment.
pub trait ParaphraseProvider: Send + Sync {
    fn paraphrase(&self, text: &str) -> Result<String, ProviderError>;
}

/// Offline stand-in: moves the first word to the end.
#[derive(Debug, Clone, Copy, Default)]
pub struct RotationParaphraser;

impl ParaphraseProvider for RotationParaphraser {
    fn paraphrase(&self, text: &str) -> Result<String, ProviderError> {
        let mut words: Vec<&str> = text.split_whitespace().collect();
        if !words.is_empty() {
            words.rotate_left(1);
        }
        Ok(words.join(" "))
    }
}

/// The two-turn dialog sent to a chat-completion endpoint. `{text}` in
/// `request` is replaced by the comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub priming_user: String,
    pub priming_assistant: String,
    pub request: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            system: "You rewrite source-code comments for a text classification dataset.".into(),
            priming_user: "I will send you a code comment written by a developer of scientific \
                           software. Reply with exactly one rephrased version that keeps its \
                           meaning and technical content. Reply with the rephrased comment only."
                .into(),
            priming_assistant: "Understood. Send the comment and I will reply with one rephrased \
                                version only."
                .into(),
            request: "Comment: {text}".into(),
        }
    }
}

impl PromptTemplate {
    pub fn messages(&self, text: &str) -> serde_json::Value {
        json!([
            {"role": "system", "content": self.system},
            {"role": "user", "content": self.priming_user},
            {"role": "assistant", "content": self.priming_assistant},
            {"role": "user", "content": self.request.replace("{text}", text)},
        ])
    }
}

/// Client for an OpenAI-style `POST {base_url}/chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct ChatParaphraser {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub template: PromptTemplate,
    pub temperature: f64,
    client: reqwest::blocking::Client,
}

impl ChatParaphraser {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(ChatParaphraser {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key: None,
            template: PromptTemplate::default(),
            temperature: 0.7,
            client,
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl ParaphraseProvider for ChatParaphraser {
    fn paraphrase(&self, text: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": self.template.messages(text),
            "temperature": self.temperature,
        });
        let mut request = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(ProviderError::Unavailable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(ProviderError::Rejected(format!("HTTP {status}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| ProviderError::Rejected(format!("unreadable response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ProviderError::Rejected("response has no choices".into()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("paraphrase provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("provider rejected example {index}: {message}")]
    ProviderRejectedText { index: usize, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct Augmentation {
    pub examples: Vec<LabeledExample>,
    /// Indices (into the input) whose paraphrase was identical to the source
    /// or normalized to nothing.
    pub dropped: Vec<usize>,
}

/// Appends one paraphrase for every example carrying `target`.
pub fn augment_minority(
    examples: &[LabeledExample],
    target: Label,
    provider: &dyn ParaphraseProvider,
) -> Result<Augmentation, AugmentError> {
    let mut out = examples.to_vec();
    let mut dropped = Vec::new();
    for (index, ex) in examples.iter().enumerate().filter(|(_, e)| e.label == target) {
        let paraphrase = provider.paraphrase(&ex.text).map_err(|e| match e {
            ProviderError::Unavailable(m) => AugmentError::ProviderUnavailable(m),
            ProviderError::Rejected(message) => AugmentError::ProviderRejectedText { index, message },
        })?;
        match normalize(&paraphrase, &StopWordPolicy::None) {
            Some(text) if text != ex.text => {
                out.push(LabeledExample::new(ex.project.clone(), text, ex.label));
            }
            _ => {
                log::warn!("dropping paraphrase of example {index}: identical or empty");
                dropped.push(index);
            }
        }
    }
    Ok(Augmentation {
        examples: out,
        dropped,
    })
}
