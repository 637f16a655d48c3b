//! In-process protocol v1 server for tests and local smoke checks.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::classifier::{Classification, Classifier, PatternRuleSet};
use crate::label::{Label, PerLabel};

pub const STUB_MODEL_NAME: &str = "stub-patterns";
pub const STUB_MAX_LENGTH: u32 = 128;

/// How the stub deviates from the protocol, if at all.
#[derive(Debug, Clone, PartialEq)]
pub enum StubMode {
    Conforming,
    /// `/info` advertises only five labels.
    FiveLabels,
    /// Every result has uniform scores and the label `scientific`.
    EchoUniform,
    /// Results omit `scores`.
    MissingScores,
    /// `/classify` answers 500 when any text equals the given one.
    FailOn(String),
    /// The first `n` `/classify` requests answer 503.
    Flaky(usize),
}

#[derive(Debug, Default)]
pub struct StubStats {
    pub classify_requests: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    in_flight: AtomicUsize,
    batch_sizes: Mutex<Vec<usize>>,
}

impl StubStats {
    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batch_sizes.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

struct Shared {
    mode: StubMode,
    backend: Arc<dyn Classifier>,
    delay: Duration,
    stats: Arc<StubStats>,
}

pub struct StubServer {
    server: Arc<Server>,
    port: u16,
    workers: Vec<JoinHandle<()>>,
    stats: Arc<StubStats>,
}

pub struct StubBuilder {
    mode: StubMode,
    backend: Arc<dyn Classifier>,
    delay: Duration,
    threads: usize,
}

impl StubBuilder {
    pub fn backend(mut self, backend: Arc<dyn Classifier>) -> Self {
        self.backend = backend;
        self
    }

    /// Sleep applied to each `/classify` request before answering.
    pub fn delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn start(self) -> std::io::Result<StubServer> {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("stub bound to a non-IP address"))?;
        let stats = Arc::new(StubStats::default());
        let shared = Arc::new(Shared {
            mode: self.mode,
            backend: self.backend,
            delay: self.delay,
            stats: stats.clone(),
        });
        let workers = (0..self.threads)
            .map(|_| {
                let server = server.clone();
                let shared = shared.clone();
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        handle(&shared, request);
                    }
                })
            })
            .collect();
        Ok(StubServer {
            server,
            port,
            workers,
            stats,
        })
    }
}

impl StubServer {
    pub fn builder(mode: StubMode) -> StubBuilder {
        StubBuilder {
            mode,
            backend: Arc::new(PatternRuleSet::default()),
            delay: Duration::ZERO,
            threads: 8,
        }
    }

    pub fn start(mode: StubMode) -> std::io::Result<StubServer> {
        Self::builder(mode).start()
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn stats(&self) -> &StubStats {
        &self.stats
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

fn reply(request: Request, status: u16, body: &Value) {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let response = Response::from_string(body.to_string())
        .with_status_code(status)
        .with_header(header);
    let _ = request.respond(response);
}

fn error(request: Request, status: u16, message: &str) {
    reply(request, status, &json!({ "error": message }))
}

fn handle(shared: &Shared, mut request: Request) {
    let path = request.url().split('?').next().unwrap_or("").to_string();
    match (request.method().clone(), path.as_str()) {
        (Method::Get, "/health") => reply(request, 200, &json!({"status": "ok"})),
        (Method::Get, "/info") => {
            let mut labels = Label::wire_names();
            if shared.mode == StubMode::FiveLabels {
                labels.pop();
            }
            reply(
                request,
                200,
                &json!({"model_name": STUB_MODEL_NAME, "labels": labels, "max_length": STUB_MAX_LENGTH}),
            )
        }
        (Method::Post, "/classify") => {
            let mut body = String::new();
            if request.as_reader().read_to_string(&mut body).is_err() {
                return error(request, 400, "request body is not UTF-8");
            }
            let stats = &shared.stats;
            let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
            let seen = stats.classify_requests.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(shared.delay);
            let outcome = classify(shared, &body, seen);
            stats.in_flight.fetch_sub(1, Ordering::SeqCst);
            match outcome {
                Ok((batch, value)) => {
                    stats.batch_sizes.lock().unwrap_or_else(|e| e.into_inner()).push(batch);
                    reply(request, 200, &value)
                }
                Err((status, message)) => error(request, status, &message),
            }
        }
        (_, "/health" | "/info" | "/classify") => error(request, 405, "method not allowed"),
        _ => error(request, 404, &format!("no route for {path}")),
    }
}

fn classify(shared: &Shared, body: &str, seen: usize) -> Result<(usize, Value), (u16, String)> {
    let value: Value = serde_json::from_str(body).map_err(|e| (400, format!("invalid JSON: {e}")))?;
    let texts: Vec<String> = value
        .get("texts")
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(|t| t.as_str().map(str::to_string)).collect())
        .ok_or((400, "body must be {\"texts\": [string]}".to_string()))?;

    match &shared.mode {
        StubMode::Flaky(n) if seen < *n => return Err((503, "temporarily unavailable".into())),
        StubMode::FailOn(bad) if texts.contains(bad) => return Err((500, format!("cannot classify {bad:?}"))),
        _ => {}
    }
    let results: Vec<Value> = match shared.mode {
        StubMode::EchoUniform => {
            let uniform = Classification {
                label: Label::Scientific,
                scores: PerLabel([1.0 / 6.0; 6]),
            };
            texts.iter().map(|_| json!(uniform)).collect()
        }
        StubMode::MissingScores => texts.iter().map(|_| json!({"label": "non-satd"})).collect(),
        _ => shared
            .backend
            .classify_batch(&texts)
            .map_err(|e| (500, e.to_string()))?
            .iter()
            .map(|c| json!(c))
            .collect(),
    };
    Ok((texts.len(), json!({ "results": results })))
}
