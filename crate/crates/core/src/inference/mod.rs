//! Client for remote classifiers speaking protocol v1 over JSON/HTTP.
//!
//! `GET /health` returns `{"status":"ok"}`, `GET /info` returns
//! `{"model_name", "labels", "max_length"}` and `POST /classify` maps
//! `{"texts": [...]}` to `{"results": [{"label", "scores"}]}`. Errors are
//! 4xx/5xx responses carrying `{"error": "..."}`.

pub mod stub;

use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::classifier::{Classification, Classifier, ClassifyError};
use crate::label::{Label, PerLabel};

pub const MIN_MAX_LENGTH: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerInfo {
    pub model_name: String,
    pub labels: Vec<String>,
    pub max_length: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceEndpoint {
    pub base_url: String,
    pub timeout: Duration,
    pub max_batch: usize,
    /// Extra attempts after the first failed one.
    pub retries: u32,
    /// Upper bound on concurrent requests issued by one client.
    pub max_in_flight: usize,
    /// Delay before the first retry; doubled on each further retry.
    pub backoff: Duration,
}

impl InferenceEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        InferenceEndpoint {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(30),
            max_batch: 32,
            retries: 2,
            max_in_flight: 4,
            backoff: Duration::from_millis(200),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url, path)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("{url} unreachable after {attempts} attempts: {message}")]
    Unreachable {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("server labels {server:?} differ from expected {expected:?}")]
    LabelContractViolation {
        server: Vec<String>,
        expected: Vec<String>,
    },
    #[error("invalid server response: {0}")]
    InvalidResponse(String),
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct WireResult {
    label: String,
    scores: PerLabel<f64>,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    results: Vec<WireResult>,
}

enum Failure {
    /// Worth retrying: transport errors and 5xx responses.
    Transient(String),
    Permanent(String),
    Malformed(String),
}

/// Counting semaphore limiting concurrent requests.
struct Slots {
    free: Mutex<usize>,
    ready: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.ready.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.ready.notify_one();
    }
}

pub struct InferenceClient {
    endpoint: InferenceEndpoint,
    http: reqwest::blocking::Client,
    slots: Slots,
}

impl InferenceClient {
    pub fn new(endpoint: InferenceEndpoint) -> Result<Self, InferenceError> {
        if endpoint.max_batch == 0 || endpoint.max_in_flight == 0 {
            return Err(InferenceError::InvalidEndpoint(
                "max_batch and max_in_flight must be at least 1".into(),
            ));
        }
        if !(endpoint.base_url.starts_with("http://") || endpoint.base_url.starts_with("https://")) {
            return Err(InferenceError::InvalidEndpoint(format!(
                "expected an http(s) URL, got {:?}",
                endpoint.base_url
            )));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(endpoint.timeout)
            .build()
            .map_err(|e| InferenceError::InvalidEndpoint(e.to_string()))?;
        let slots = Slots {
            free: Mutex::new(endpoint.max_in_flight),
            ready: Condvar::new(),
        };
        Ok(InferenceClient { endpoint, http, slots })
    }

    pub fn endpoint(&self) -> &InferenceEndpoint {
        &self.endpoint
    }

    fn attempt<T>(&self, mut call: impl FnMut() -> Result<T, Failure>) -> Result<T, (Failure, u32)> {
        let mut delay = self.endpoint.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            let result = {
                let _slot = self.slots.acquire();
                call()
            };
            match result {
                Err(Failure::Transient(msg)) if attempts <= self.endpoint.retries => {
                    log::debug!("attempt {attempts} failed: {msg}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                Err(f) => return Err((f, attempts)),
                Ok(v) => return Ok(v),
            }
        }
    }

    fn get_json<T: for<'de> Deserialize<'de>>(&self, path: &str) -> Result<T, InferenceError> {
        let url = self.endpoint.url(path);
        self.attempt(|| {
            let response = self.http.get(&url).send().map_err(|e| Failure::Transient(e.to_string()))?;
            read_json(response)
        })
        .map_err(|(failure, attempts)| match failure {
            Failure::Transient(message) => InferenceError::Unreachable {
                url: url.clone(),
                attempts,
                message,
            },
            Failure::Permanent(m) | Failure::Malformed(m) => InferenceError::InvalidResponse(format!("{url}: {m}")),
        })
    }

    /// Checks `/health` and `/info`, validating the label contract.
    pub fn handshake(&self) -> Result<ServerInfo, InferenceError> {
        #[derive(Deserialize)]
        struct Health {
            status: String,
        }
        let health: Health = self.get_json("/health")?;
        if health.status != "ok" {
            return Err(InferenceError::InvalidResponse(format!("health status {:?}", health.status)));
        }
        let info: ServerInfo = self.get_json("/info")?;
        let expected = Label::wire_names();
        if info.labels != expected {
            return Err(InferenceError::LabelContractViolation {
                server: info.labels,
                expected,
            });
        }
        if info.max_length < MIN_MAX_LENGTH {
            return Err(InferenceError::InvalidResponse(format!(
                "max_length {} below {MIN_MAX_LENGTH}",
                info.max_length
            )));
        }
        Ok(info)
    }

    fn classify_chunk(&self, texts: &[String]) -> Result<Vec<Classification>, Failure> {
        let response = self
            .http
            .post(self.endpoint.url("/classify"))
            .json(&ClassifyRequest { texts })
            .send()
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let body: ClassifyResponse = read_json(response)?;
        if body.results.len() != texts.len() {
            return Err(Failure::Malformed(format!(
                "{} results for {} texts",
                body.results.len(),
                texts.len()
            )));
        }
        body.results.into_iter().map(to_classification).collect()
    }

    /// Classifies `texts` in chunks of at most `max_batch`, preserving order.
    /// Any failed chunk fails the whole call.
    pub fn classify_remote(&self, texts: &[String]) -> Result<Vec<Classification>, ClassifyError> {
        let chunks: Vec<Range<usize>> = (0..texts.len())
            .step_by(self.endpoint.max_batch)
            .map(|s| s..(s + self.endpoint.max_batch).min(texts.len()))
            .collect();
        let outputs: Vec<Mutex<Option<Result<Vec<Classification>, ClassifyError>>>> =
            chunks.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let workers = self.endpoint.max_in_flight.min(chunks.len());

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= chunks.len() || failed.load(Ordering::SeqCst) {
                        break;
                    }
                    let range = chunks[i].clone();
                    let result = self
                        .attempt(|| self.classify_chunk(&texts[range.clone()]))
                        .map_err(|(failure, attempts)| match failure {
                            Failure::Malformed(m) => ClassifyError::MalformedResponse(m),
                            Failure::Transient(m) | Failure::Permanent(m) => ClassifyError::BackendFailure {
                                range: range.clone(),
                                message: format!("{m} (after {attempts} attempts)"),
                            },
                        });
                    if result.is_err() {
                        failed.store(true, Ordering::SeqCst);
                    }
                    *outputs[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(result);
                });
            }
        });

        let mut out = Vec::with_capacity(texts.len());
        let mut skipped = None;
        for (slot, range) in outputs.into_iter().zip(chunks) {
            match slot.into_inner().unwrap_or_else(|e| e.into_inner()) {
                Some(Ok(part)) => out.extend(part),
                Some(Err(e)) => return Err(e),
                None => skipped = skipped.or(Some(range)),
            }
        }
        // Chunks are claimed in order, so a failed chunk precedes any skipped one.
        if let Some(range) = skipped {
            return Err(ClassifyError::BackendFailure {
                range,
                message: "not attempted after an earlier failure".into(),
            });
        }
        Ok(out)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(response: reqwest::blocking::Response) -> Result<T, Failure> {
    let status = response.status();
    let body = response.text().map_err(|e| Failure::Transient(e.to_string()))?;
    if !status.is_success() {
        let detail = serde_json::from_str::<serde_json::Value>(&body)
            .ok()
            .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_string))
            .unwrap_or(body);
        let message = format!("HTTP {}: {detail}", status.as_u16());
        return Err(if status.is_server_error() {
            Failure::Transient(message)
        } else {
            Failure::Permanent(message)
        });
    }
    serde_json::from_str(&body).map_err(|e| Failure::Malformed(e.to_string()))
}

fn to_classification(result: WireResult) -> Result<Classification, Failure> {
    let declared = Label::from_wire(&result.label)
        .ok_or_else(|| Failure::Malformed(format!("unknown label {:?}", result.label)))?;
    let scores = result.scores;
    let sum: f64 = scores.0.iter().sum();
    if scores.0.iter().any(|s| !s.is_finite() || *s < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(Failure::Malformed(format!("scores are not a distribution: {:?}", scores.0)));
    }
    let classification = Classification::from_scores(scores);
    // The declared label must be one of the maxima; ties resolve canonically.
    if scores[declared] < classification.score() {
        return Err(Failure::Malformed(format!(
            "label {declared} is not the highest-scoring label"
        )));
    }
    Ok(classification)
}

/// Remote backend usable wherever a [`Classifier`] is expected.
pub struct RemoteClassifier {
    client: InferenceClient,
    info: ServerInfo,
}

impl RemoteClassifier {
    pub fn connect(endpoint: InferenceEndpoint) -> Result<Self, InferenceError> {
        let client = InferenceClient::new(endpoint)?;
        let info = client.handshake()?;
        Ok(RemoteClassifier { client, info })
    }

    pub fn info(&self) -> &ServerInfo {
        &self.info
    }
}

impl Classifier for RemoteClassifier {
    fn name(&self) -> String {
        format!("remote:{}", self.info.model_name)
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<Classification>, ClassifyError> {
        self.client.classify_remote(texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wire(label: &str, scores: [f64; 6]) -> WireResult {
        WireResult {
            label: label.into(),
            scores: PerLabel(scores),
        }
    }

    #[test]
    fn uniform_scores_resolve_to_non_satd() {
        let c = to_classification(wire("scientific", [1.0 / 6.0; 6])).ok().unwrap();
        assert_eq!(c.label, Label::NonSatd);
    }

    #[test]
    fn inconsistent_label_is_malformed() {
        let r = to_classification(wire("test", [0.5, 0.1, 0.1, 0.1, 0.1, 0.1]));
        assert!(matches!(r, Err(Failure::Malformed(_))));
        let r = to_classification(wire("test", [0.5, 0.1, 0.1, 0.1, 0.1, 0.2]));
        assert!(matches!(r, Err(Failure::Malformed(_))));
        let r = to_classification(wire("bogus", [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        assert!(matches!(r, Err(Failure::Malformed(_))));
    }

    #[test]
    fn endpoint_validation() {
        let mut e = InferenceEndpoint::new("http://localhost:1/");
        assert_eq!(e.base_url, "http://localhost:1");
        e.max_batch = 0;
        assert!(InferenceClient::new(e).is_err());
        assert!(InferenceClient::new(InferenceEndpoint::new("localhost:1")).is_err());
    }
}
