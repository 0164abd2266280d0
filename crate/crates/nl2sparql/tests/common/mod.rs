//! Minimal HTTP server for endpoint tests, plus fixture staging for
//! offline pipeline runs. Each test binary uses a subset of this.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub struct Request {
    pub path: String,
    pub body: String,
}

pub struct Response {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

impl Response {
    pub fn json(body: impl Into<String>) -> Self {
        Self {
            status: 200,
            content_type: "application/json".into(),
            body: body.into(),
        }
    }

    pub fn status(status: u16, body: impl Into<String>) -> Self {
        Self {
            status,
            content_type: "text/plain".into(),
            body: body.into(),
        }
    }
}

pub struct TestServer {
    pub base_url: String,
    hits: Arc<AtomicUsize>,
}

impl TestServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&Request) -> Response + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let addr = listener.local_addr().expect("local addr");
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_for_thread = Arc::clone(&hits);
        let handler = Arc::new(handler);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let handler = Arc::clone(&handler);
                let hits = Arc::clone(&hits_for_thread);
                std::thread::spawn(move || {
                    if let Some(request) = read_request(&stream) {
                        hits.fetch_add(1, Ordering::SeqCst);
                        let response = handler(&request);
                        write_response(&stream, &response);
                    }
                });
            }
        });
        Self {
            base_url: format!("http://{addr}"),
            hits,
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn read_request(stream: &std::net::TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(value) = line
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = value;
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    Some(Request {
        path,
        body: String::from_utf8_lossy(&body).into_owned(),
    })
}

fn write_response(mut stream: &std::net::TcpStream, response: &Response) {
    let payload = format!(
        "HTTP/1.1 {} X\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        response.status,
        response.content_type,
        response.body.len(),
        response.body
    );
    let _ = stream.write_all(payload.as_bytes());
    let _ = stream.flush();
}

/// SPARQL JSON results body for the given header and rows; cells are
/// rendered as plain literals.
pub fn sparql_json(vars: &[&str], rows: &[Vec<&str>]) -> String {
    let bindings: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let mut binding = serde_json::Map::new();
            for (var, cell) in vars.iter().zip(row) {
                binding.insert(
                    var.to_string(),
                    serde_json::json!({"type": "literal", "value": cell}),
                );
            }
            serde_json::Value::Object(binding)
        })
        .collect();
    serde_json::json!({
        "head": {"vars": vars},
        "results": {"bindings": bindings}
    })
    .to_string()
}

/// OpenAI-style chat completion body with the given content.
pub fn chat_completion(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

// ---------------------------------------------------------------------
// Offline pipeline fixtures
// ---------------------------------------------------------------------

use std::path::Path;
use std::time::Duration;

use nl2sparql::execution::{record_response, ResultsFormat};
use nl2sparql::llm::{seed_generation, LlmEndpointConfig};
use nl2sparql::prompting::{build_zero_shot_prompt, Strategy};
use nl2sparql::runner::RunConfig;

/// One dataset record for fixture files.
pub struct FixtureItem {
    pub id: &'static str,
    pub question: String,
    pub gold_query: String,
    /// (vars, rows); None leaves gold_results null so the pipeline
    /// executes the gold query instead.
    pub gold_results: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl FixtureItem {
    pub fn new(id: &'static str, question: &str, gold_query: &str) -> Self {
        Self {
            id,
            question: question.to_string(),
            gold_query: gold_query.to_string(),
            gold_results: None,
        }
    }

    pub fn with_gold_rows(mut self, vars: &[&str], rows: &[&[&str]]) -> Self {
        self.gold_results = Some((
            vars.iter().map(|v| v.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|c| c.to_string()).collect())
                .collect(),
        ));
        self
    }
}

pub fn write_dataset(path: &Path, train: &[FixtureItem], test: &[FixtureItem]) {
    let record = |item: &FixtureItem| {
        serde_json::json!({
            "id": item.id,
            "question": item.question,
            "paraphrases": [],
            "gold_query": item.gold_query,
            "gold_results": item.gold_results.as_ref().map(|(vars, rows)| {
                serde_json::json!({"vars": vars, "rows": rows})
            }),
            "origin": "handcrafted",
        })
    };
    let body = serde_json::json!({
        "train": train.iter().map(record).collect::<Vec<_>>(),
        "test": test.iter().map(record).collect::<Vec<_>>(),
    });
    std::fs::write(path, serde_json::to_vec_pretty(&body).unwrap()).unwrap();
}

/// Offline zero-shot config rooted in `dir` (dataset.json, cache/,
/// recordings/, out/).
pub fn offline_config(dir: &Path, runs: usize) -> RunConfig {
    let mut generation = LlmEndpointConfig::new("http://offline.invalid/v1", "fixture-model");
    generation.timeout = Duration::from_secs(5);
    generation.max_retries = 0;
    RunConfig {
        strategy: Strategy::ZeroShot,
        dataset_path: dir.join("dataset.json"),
        sparql_endpoint: "http://offline.invalid/sparql".into(),
        property_catalog_path: None,
        rag_k: 10,
        runs,
        cache_dir: dir.join("cache"),
        output_dir: dir.join("out"),
        concurrency_limit: 2,
        offline_replay: true,
        expand_paraphrases: false,
        sparql_timeout: Duration::from_secs(5),
        sparql_results_format: ResultsFormat::Json,
        strict_literals: false,
        sparql_recordings_dir: dir.join("recordings"),
        generation,
        correction: None,
        embedding: None,
        model_epoch: None,
    }
}

/// Seeds the generation cache so the zero-shot prompt for `question`
/// replays as `output` under `salt`.
pub fn seed_zero_shot(config: &RunConfig, question: &str, salt: &str, output: &str) {
    let prompt = build_zero_shot_prompt(question).unwrap();
    seed_generation(
        &config.cache_dir.join("llm"),
        &config.generation,
        &prompt,
        salt,
        output,
    )
    .unwrap();
}

/// Records a successful JSON response for `query` in the replay store.
pub fn record_rows(config: &RunConfig, query: &str, vars: &[&str], rows: &[Vec<&str>]) {
    record_response(
        &config.sparql_recordings_dir,
        query,
        200,
        "application/sparql-results+json",
        &sparql_json(vars, rows),
    )
    .unwrap();
}
