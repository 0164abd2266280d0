//! Endpoint behaviour of the LLM client: caching, retries, and error
//! mapping, against a local HTTP server.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use common::{chat_completion, Response, TestServer};
use nl2sparql::llm::{LlmClient, LlmEndpointConfig, LlmError};
use nl2sparql::prompting::build_zero_shot_prompt;

fn fast_config(base_url: &str) -> LlmEndpointConfig {
    let mut cfg = LlmEndpointConfig::new(base_url, "test-model");
    cfg.timeout = Duration::from_secs(5);
    cfg.max_retries = 2;
    cfg.retry_base = Duration::from_millis(5);
    cfg
}

#[test]
fn second_identical_call_hits_cache_with_identical_output() {
    let server = TestServer::start(|_req| {
        Response::json(chat_completion("SELECT ?s WHERE { ?s ?p ?o }"))
    });
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::new(fast_config(&server.base_url), dir.path()).unwrap();
    let prompt = build_zero_shot_prompt("Which dataset?").unwrap();

    let first = client.generate(&prompt, "run1").unwrap();
    assert!(!first.cache_hit);
    let second = client.generate(&prompt, "run1").unwrap();
    assert!(second.cache_hit);
    assert_eq!(first.raw_output, second.raw_output);
    assert_eq!(server.hits(), 1);

    // A different salt is a different cache entry and reaches the server.
    let third = client.generate(&prompt, "run2").unwrap();
    assert!(!third.cache_hit);
    assert_eq!(server.hits(), 2);
}

#[test]
fn unauthorized_maps_to_endpoint_error_with_status() {
    let server = TestServer::start(|_req| Response::status(401, "invalid api key"));
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::new(fast_config(&server.base_url), dir.path()).unwrap();
    let prompt = build_zero_shot_prompt("q?").unwrap();
    match client.generate(&prompt, "run1") {
        Err(LlmError::Endpoint { status, body }) => {
            assert_eq!(status, 401);
            assert!(body.contains("invalid api key"));
        }
        other => panic!("expected endpoint error, got {other:?}"),
    }
    // 4xx must not retry.
    assert_eq!(server.hits(), 1);
}

#[test]
fn transient_5xx_is_retried_until_success() {
    let failures = AtomicUsize::new(0);
    let server = TestServer::start(move |_req| {
        if failures.fetch_add(1, Ordering::SeqCst) < 2 {
            Response::status(500, "overloaded")
        } else {
            Response::json(chat_completion("SELECT ?s WHERE { ?s ?p ?o }"))
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::new(fast_config(&server.base_url), dir.path()).unwrap();
    let prompt = build_zero_shot_prompt("retry?").unwrap();
    let record = client.generate(&prompt, "run1").unwrap();
    assert_eq!(record.raw_output, "SELECT ?s WHERE { ?s ?p ?o }");
    assert_eq!(server.hits(), 3);
}

#[test]
fn attempts_are_bounded_by_one_plus_max_retries() {
    let server = TestServer::start(|_req| Response::status(500, "down"));
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fast_config(&server.base_url);
    cfg.max_retries = 1;
    let client = LlmClient::new(cfg, dir.path()).unwrap();
    let prompt = build_zero_shot_prompt("down?").unwrap();
    match client.generate(&prompt, "run1") {
        Err(LlmError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("expected transport error, got {other:?}"),
    }
    assert_eq!(server.hits(), 2);
}

#[test]
fn empty_completion_is_an_error() {
    let server = TestServer::start(|_req| Response::json(chat_completion("")));
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::new(fast_config(&server.base_url), dir.path()).unwrap();
    let prompt = build_zero_shot_prompt("empty?").unwrap();
    assert!(matches!(
        client.generate(&prompt, "run1"),
        Err(LlmError::EmptyCompletion)
    ));
}

fn embeddings_body(count: usize, dims: usize) -> String {
    let data: Vec<serde_json::Value> = (0..count)
        .map(|i| {
            let vector: Vec<f64> = (0..dims).map(|d| (i * dims + d) as f64 * 0.1 + 0.1).collect();
            serde_json::json!({"index": i, "embedding": vector})
        })
        .collect();
    serde_json::json!({"data": data}).to_string()
}

#[test]
fn embeddings_align_with_inputs_and_dedupe() {
    let server = TestServer::start(|req| {
        assert_eq!(req.path, "/embeddings");
        let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
        let n = body["input"].as_array().unwrap().len();
        Response::json(embeddings_body(n, 4))
    });
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::new(fast_config(&server.base_url), dir.path()).unwrap();

    let texts = vec!["a".to_string(), "a".to_string(), "b".to_string()];
    let vectors = client.embed_texts(&texts).unwrap();
    assert_eq!(vectors.len(), 3);
    assert_eq!(vectors[0], vectors[1]);
    assert_eq!(vectors[0].len(), 4);
    assert_eq!(vectors[1].len(), vectors[2].len());
    // Two unique texts, one batched endpoint call.
    assert_eq!(server.hits(), 1);

    // Everything is cached now; a repeat call stays offline.
    let again = client.embed_texts(&texts).unwrap();
    assert_eq!(again, vectors);
    assert_eq!(server.hits(), 1);
}

#[test]
fn ragged_vectors_are_rejected() {
    let server = TestServer::start(|_req| {
        Response::json(
            serde_json::json!({"data": [
                {"index": 0, "embedding": [0.1, 0.2]},
                {"index": 1, "embedding": [0.1, 0.2, 0.3]},
            ]})
            .to_string(),
        )
    });
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::new(fast_config(&server.base_url), dir.path()).unwrap();
    let texts = vec!["a".to_string(), "b".to_string()];
    assert!(matches!(
        client.embed_texts(&texts),
        Err(LlmError::RaggedVectors)
    ));
}

#[test]
fn offline_mode_never_touches_the_network() {
    let server = TestServer::start(|_req| {
        Response::json(chat_completion("SELECT ?s WHERE { ?s ?p ?o }"))
    });
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(&server.base_url);
    let online = LlmClient::new(cfg.clone(), dir.path()).unwrap();
    let prompt = build_zero_shot_prompt("warm?").unwrap();
    online.generate(&prompt, "run1").unwrap();
    assert_eq!(server.hits(), 1);

    let offline = LlmClient::offline(cfg, dir.path()).unwrap();
    let replayed = offline.generate(&prompt, "run1").unwrap();
    assert!(replayed.cache_hit);
    assert_eq!(server.hits(), 1);
    assert!(matches!(
        offline.generate(&prompt, "run-uncached"),
        Err(LlmError::CacheMiss(_))
    ));
}
