//! OpenAI-compatible chat-completion and embedding client with retries,
//! timeouts, and a content-addressed response cache.
//!
//! Cache keys hash the model name, temperature, prompt bytes, and a
//! per-run salt, so repeated runs sample independently while replaying a
//! finished run performs zero network calls and returns byte-identical
//! records. Entries live one file per key under
//! `cache/{first-2-hex}/{digest}.json` and store both request and
//! response, so fixtures stay inspectable and diffable.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompting::{EmbeddingProvider, EmbeddingVector, PromptError, PromptInstance};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("endpoint returned a malformed response: {0}")]
    MalformedResponse(String),
    #[error("endpoint returned an empty completion")]
    EmptyCompletion,
    #[error("no texts to embed")]
    NoTexts,
    #[error("embedding endpoint returned vectors of inconsistent lengths")]
    RaggedVectors,
    #[error("embedding vector contains non-finite values")]
    NonFiniteVector,
    #[error("offline replay requires a populated cache; missing key {0}")]
    CacheMiss(String),
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error("cache error: {0}")]
    Cache(String),
}

/// Connection settings for one chat/embedding endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    pub max_retries: u32,
    /// Base delay for exponential backoff; attempt i waits
    /// `retry_base * 2^i` plus jitter.
    pub retry_base: Duration,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl LlmEndpointConfig {
    pub fn new(base_url: &str, model_name: &str) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            model_name: model_name.to_string(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            retry_base: Duration::from_millis(250),
            api_key: None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.base_url.is_empty() {
            return Err(LlmError::InvalidConfig("base_url is empty".into()));
        }
        if self.model_name.is_empty() {
            return Err(LlmError::InvalidConfig("model_name is empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::InvalidConfig("temperature must be >= 0".into()));
        }
        if self.timeout.is_zero() {
            return Err(LlmError::InvalidConfig("timeout must be > 0".into()));
        }
        Ok(())
    }
}

/// One generation, straight from the endpoint or replayed from cache.
/// `raw_output` is exactly what the endpoint returned; no trimming happens
/// at this layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub prompt: PromptInstance,
    pub raw_output: String,
    pub model_name: String,
    pub latency: Duration,
    pub cache_hit: bool,
}

/// Anything that can complete a (system, user) prompt into text; the
/// correction layer is written against this.
pub trait TextGenerator {
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, LlmError>;
}

impl<F> TextGenerator for F
where
    F: Fn(&str, &str) -> Result<String, LlmError>,
{
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, LlmError> {
        self(system_text, user_text)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CachedGeneration {
    request: GenerationKey,
    response_body: String,
    raw_output: String,
    latency_ms: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct GenerationKey {
    model: String,
    temperature: f64,
    system: String,
    user: String,
    salt: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CachedEmbedding {
    request: EmbeddingKey,
    vector: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingKey {
    model: String,
    text: String,
}

/// File-per-key cache under `dir/{first-2-hex}/{digest}.json`, written
/// atomically (temp file then rename).
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
        }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    fn load<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<Option<T>, LlmError> {
        let path = self.path(key);
        let raw = match std::fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        serde_json::from_str(&raw)
            .map(Some)
            .map_err(|e| LlmError::Cache(format!("corrupt entry {}: {e}", path.display())))
    }

    fn store<T: Serialize>(&self, key: &str, value: &T) -> Result<(), LlmError> {
        let path = self.path(key);
        let parent = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(parent)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", parent.display())))?;
        let tmp = path.with_extension("tmp");
        let body = serde_json::to_vec_pretty(value).expect("serialize cache entry");
        std::fs::write(&tmp, body).map_err(|e| LlmError::Cache(format!("{}: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))
    }
}

fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serialize cache key");
    hex::encode(Sha256::digest(bytes))
}

/// Cache key for a generation call.
pub fn generation_cache_key(
    cfg: &LlmEndpointConfig,
    prompt: &PromptInstance,
    run_salt: &str,
) -> String {
    digest_json(&GenerationKey {
        model: cfg.model_name.clone(),
        temperature: cfg.temperature,
        system: prompt.system_text.clone(),
        user: prompt.user_text.clone(),
        salt: run_salt.to_string(),
    })
}

/// Pre-populates a cache entry as if the endpoint had returned
/// `raw_output`; offline fixtures are staged with this.
pub fn seed_generation(
    cache_dir: &Path,
    cfg: &LlmEndpointConfig,
    prompt: &PromptInstance,
    run_salt: &str,
    raw_output: &str,
) -> Result<(), LlmError> {
    let cache = ResponseCache::new(cache_dir);
    let key = generation_cache_key(cfg, prompt, run_salt);
    cache.store(
        &key,
        &CachedGeneration {
            request: GenerationKey {
                model: cfg.model_name.clone(),
                temperature: cfg.temperature,
                system: prompt.system_text.clone(),
                user: prompt.user_text.clone(),
                salt: run_salt.to_string(),
            },
            response_body: String::new(),
            raw_output: raw_output.to_string(),
            latency_ms: 0,
        },
    )
}

/// Chat/embedding client bound to one endpoint config and one cache
/// directory. In offline mode every request must hit the cache.
pub struct LlmClient {
    cfg: LlmEndpointConfig,
    cache: ResponseCache,
    http: reqwest::blocking::Client,
    offline: bool,
}

impl LlmClient {
    pub fn new(cfg: LlmEndpointConfig, cache_dir: &Path) -> Result<Self, LlmError> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            cfg,
            cache: ResponseCache::new(cache_dir),
            http,
            offline: false,
        })
    }

    pub fn offline(cfg: LlmEndpointConfig, cache_dir: &Path) -> Result<Self, LlmError> {
        let mut client = Self::new(cfg, cache_dir)?;
        client.offline = true;
        Ok(client)
    }

    pub fn config(&self) -> &LlmEndpointConfig {
        &self.cfg
    }

    /// Generates a completion for the prompt, serving from cache when the
    /// (model, temperature, prompt, salt) key is already present.
    pub fn generate(
        &self,
        prompt: &PromptInstance,
        run_salt: &str,
    ) -> Result<GenerationRecord, LlmError> {
        let key = generation_cache_key(&self.cfg, prompt, run_salt);
        if let Some(entry) = self.cache.load::<CachedGeneration>(&key)? {
            return Ok(GenerationRecord {
                prompt: prompt.clone(),
                raw_output: entry.raw_output,
                model_name: self.cfg.model_name.clone(),
                latency: Duration::from_millis(entry.latency_ms),
                cache_hit: true,
            });
        }
        if self.offline {
            return Err(LlmError::CacheMiss(key));
        }

        let mut messages = Vec::new();
        if !prompt.system_text.is_empty() {
            messages.push(serde_json::json!({"role": "system", "content": prompt.system_text}));
        }
        messages.push(serde_json::json!({"role": "user", "content": prompt.user_text}));
        let request_body = serde_json::json!({
            "model": self.cfg.model_name,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        });

        let start = Instant::now();
        let body = self.post_with_retries("/chat/completions", &request_body)?;
        let latency = start.elapsed();

        let parsed: serde_json::Value = serde_json::from_str(&body)
            .map_err(|e| LlmError::MalformedResponse(format!("invalid JSON: {e}")))?;
        let raw_output = parsed
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                LlmError::MalformedResponse("missing choices[0].message.content".into())
            })?
            .to_string();
        if raw_output.is_empty() {
            return Err(LlmError::EmptyCompletion);
        }

        self.cache.store(
            &key,
            &CachedGeneration {
                request: GenerationKey {
                    model: self.cfg.model_name.clone(),
                    temperature: self.cfg.temperature,
                    system: prompt.system_text.clone(),
                    user: prompt.user_text.clone(),
                    salt: run_salt.to_string(),
                },
                response_body: body,
                raw_output: raw_output.clone(),
                latency_ms: latency.as_millis() as u64,
            },
        )?;
        Ok(GenerationRecord {
            prompt: prompt.clone(),
            raw_output,
            model_name: self.cfg.model_name.clone(),
            latency,
            cache_hit: false,
        })
    }

    /// Embeds a batch of texts, cached per (model, text). Only cache
    /// misses reach the endpoint, deduplicated, in a single call.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, LlmError> {
        if texts.is_empty() {
            return Err(LlmError::NoTexts);
        }
        let keys: Vec<String> = texts
            .iter()
            .map(|text| {
                digest_json(&EmbeddingKey {
                    model: self.cfg.model_name.clone(),
                    text: text.clone(),
                })
            })
            .collect();

        let mut vectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(texts.len());
        for key in &keys {
            vectors.push(self.cache.load::<CachedEmbedding>(key)?.map(|e| e.vector));
        }

        let mut missing: Vec<&String> = Vec::new();
        for (text, vector) in texts.iter().zip(&vectors) {
            if vector.is_none() && !missing.contains(&text) {
                missing.push(text);
            }
        }
        if !missing.is_empty() {
            if self.offline {
                let idx = vectors.iter().position(Option::is_none).expect("missing");
                return Err(LlmError::CacheMiss(keys[idx].clone()));
            }
            let request_body = serde_json::json!({
                "model": self.cfg.model_name,
                "input": missing,
            });
            let body = self.post_with_retries("/embeddings", &request_body)?;
            let parsed: serde_json::Value = serde_json::from_str(&body)
                .map_err(|e| LlmError::MalformedResponse(format!("invalid JSON: {e}")))?;
            let data = parsed
                .pointer("/data")
                .and_then(|v| v.as_array())
                .ok_or_else(|| LlmError::MalformedResponse("missing data array".into()))?;
            if data.len() != missing.len() {
                return Err(LlmError::MalformedResponse(format!(
                    "expected {} embeddings, got {}",
                    missing.len(),
                    data.len()
                )));
            }
            for (text, item) in missing.iter().zip(data) {
                let values: Vec<f64> = item
                    .pointer("/embedding")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| LlmError::MalformedResponse("missing embedding".into()))?
                    .iter()
                    .map(|v| v.as_f64().unwrap_or(f64::NAN))
                    .collect();
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(LlmError::NonFiniteVector);
                }
                let key = digest_json(&EmbeddingKey {
                    model: self.cfg.model_name.clone(),
                    text: (*text).clone(),
                });
                self.cache.store(
                    &key,
                    &CachedEmbedding {
                        request: EmbeddingKey {
                            model: self.cfg.model_name.clone(),
                            text: (*text).clone(),
                        },
                        vector: values,
                    },
                )?;
            }
            for (idx, text) in texts.iter().enumerate() {
                if vectors[idx].is_none() {
                    let key = digest_json(&EmbeddingKey {
                        model: self.cfg.model_name.clone(),
                        text: text.clone(),
                    });
                    vectors[idx] = self.cache.load::<CachedEmbedding>(&key)?.map(|e| e.vector);
                }
            }
        }

        let vectors: Vec<Vec<f64>> = vectors
            .into_iter()
            .map(|v| v.ok_or_else(|| LlmError::MalformedResponse("embedding not filled".into())))
            .collect::<Result<_, _>>()?;
        let first_len = vectors[0].len();
        if vectors.iter().any(|v| v.len() != first_len) {
            return Err(LlmError::RaggedVectors);
        }
        Ok(vectors.into_iter().map(EmbeddingVector::new).collect())
    }

    /// POST with exponential backoff on 5xx and transport failures; 4xx
    /// fails immediately with the body attached.
    fn post_with_retries(
        &self,
        path: &str,
        body: &serde_json::Value,
    ) -> Result<String, LlmError> {
        let url = format!("{}{}", self.cfg.base_url, path);
        let attempts = 1 + self.cfg.max_retries;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(backoff_delay(self.cfg.retry_base, attempt - 1));
            }
            let mut request = self.http.post(&url).json(body);
            if let Some(key) = &self.cfg.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status().as_u16();
                    let text = response.text().unwrap_or_default();
                    match status {
                        200..=299 => return Ok(text),
                        400..=499 => {
                            return Err(LlmError::Endpoint {
                                status,
                                body: text,
                            })
                        }
                        _ => last_error = format!("HTTP {status}: {text}"),
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(LlmError::Transport {
            attempts,
            message: last_error,
        })
    }
}

fn backoff_delay(base: Duration, exponent: u32) -> Duration {
    use rand::Rng;
    let scaled = base.saturating_mul(2u32.saturating_pow(exponent));
    let jitter_cap = (scaled.as_millis() as u64 / 2).max(1);
    let jitter = rand::rng().random_range(0..jitter_cap);
    scaled + Duration::from_millis(jitter)
}

/// [`TextGenerator`] view of a client under one run salt, so correction
/// calls share the run's cache keyspace.
pub struct SaltedGenerator<'a> {
    pub client: &'a LlmClient,
    pub salt: &'a str,
}

impl TextGenerator for SaltedGenerator<'_> {
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, LlmError> {
        let prompt = PromptInstance {
            strategy: crate::prompting::Strategy::ZeroShot,
            system_text: system_text.to_string(),
            user_text: user_text.to_string(),
            provenance: Default::default(),
        };
        self.client.generate(&prompt, self.salt).map(|r| r.raw_output)
    }
}

impl EmbeddingProvider for LlmClient {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, PromptError> {
        self.embed_texts(texts)
            .map_err(|e| PromptError::Provider(e.to_string()))
    }
}
