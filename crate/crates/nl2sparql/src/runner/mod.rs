//! Orchestration: configuration, the generate → clean → validate →
//! correct → execute → score pipeline, run repetition, and artifact
//! emission.
//!
//! Per-item failures become error categories and never abort a run; a
//! hard-down LLM endpoint does abort, leaving an append-only checkpoint
//! log that a re-invocation resumes from.

mod report;

pub use report::{emit_report, rerender_from_dir, round2, METRIC_COLUMNS};

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{self, DatasetFormat, DatasetSplit, QAExample};
use crate::execution::{
    normalize_results, ExecOptions, ExecutionStatus, NormalizedResultSet, ResultsFormat,
    SparqlClient,
};
use crate::llm::{LlmClient, LlmEndpointConfig, LlmError};
use crate::metrics::{
    aggregate_runs, score_run, MetricReport, RunAggregate, ScoredItem, TOKENIZER_VERSION,
};
use crate::postprocess::{
    classify, clean, extract_query, llm_correct, ErrorCategory, EvaluationBundle,
};
use crate::prompting::{
    build_one_shot_prompt, build_rag_for, build_zero_shot_for, load_property_catalog,
    retrieve_properties, select_one_shot_example, EmbeddingProvider, LexicalEmbedder,
    PromptInstance, PropertyCatalogEntry, Strategy,
};
use crate::sparql::{parse, validate_aggregation, Diagnostic};

#[derive(Debug, Error)]
pub enum RunnerError {
    /// Pre-flight problems: bad config file, missing resources. Exit 1.
    #[error("config error: {0}")]
    Config(String),
    /// Mid-run aborts: endpoint hard-down, I/O failures. Exit 2.
    #[error("runtime error: {0}")]
    Runtime(String),
}

/// Full pipeline configuration; usually loaded from a TOML file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub dataset_path: PathBuf,
    pub sparql_endpoint: String,
    pub property_catalog_path: Option<PathBuf>,
    pub rag_k: usize,
    pub runs: usize,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub concurrency_limit: usize,
    pub offline_replay: bool,
    pub expand_paraphrases: bool,
    pub sparql_timeout: Duration,
    pub sparql_results_format: ResultsFormat,
    pub strict_literals: bool,
    /// Recorded SPARQL responses: written in live runs, read in replay.
    pub sparql_recordings_dir: PathBuf,
    pub generation: LlmEndpointConfig,
    pub correction: Option<LlmEndpointConfig>,
    /// None means the deterministic lexical fallback embedder.
    pub embedding: Option<LlmEndpointConfig>,
    /// Free-form checkpoint metadata (e.g. training epochs); recorded in
    /// the manifest, never verified.
    pub model_epoch: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.runs == 0 {
            return Err(RunnerError::Config("runs must be at least 1".into()));
        }
        if self.rag_k == 0 {
            return Err(RunnerError::Config("rag_k must be at least 1".into()));
        }
        if self.concurrency_limit == 0 {
            return Err(RunnerError::Config(
                "concurrency_limit must be at least 1".into(),
            ));
        }
        if self.strategy.uses_rag() && self.property_catalog_path.is_none() {
            return Err(RunnerError::Config(format!(
                "strategy {} requires property_catalog",
                self.strategy.label()
            )));
        }
        self.generation
            .validate()
            .map_err(|e| RunnerError::Config(format!("generation endpoint: {e}")))?;
        if let Some(correction) = &self.correction {
            correction
                .validate()
                .map_err(|e| RunnerError::Config(format!("correction endpoint: {e}")))?;
        }
        if let Some(embedding) = &self.embedding {
            embedding
                .validate()
                .map_err(|e| RunnerError::Config(format!("embedding endpoint: {e}")))?;
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, RunnerError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: ConfigFile = toml::from_str(&raw)
            .map_err(|e| RunnerError::Config(format!("cannot parse {}: {e}", path.display())))?;
        file.into_config()
    }
}

/// Serde mirror of the TOML config file; see the README for the key
/// reference.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    strategy: String,
    dataset: PathBuf,
    sparql_endpoint: String,
    property_catalog: Option<PathBuf>,
    #[serde(default = "default_rag_k")]
    rag_k: usize,
    #[serde(default = "default_runs")]
    runs: usize,
    cache_dir: PathBuf,
    output_dir: PathBuf,
    #[serde(default = "default_concurrency")]
    concurrency: usize,
    #[serde(default)]
    offline_replay: bool,
    #[serde(default)]
    expand_paraphrases: bool,
    #[serde(default = "default_sparql_timeout_secs")]
    sparql_timeout_secs: u64,
    #[serde(default)]
    sparql_results_format: Option<String>,
    #[serde(default)]
    strict_literals: bool,
    #[serde(default)]
    sparql_recordings: Option<PathBuf>,
    #[serde(default)]
    model_epoch: Option<String>,
    generation: EndpointFile,
    correction: Option<EndpointFile>,
    embedding: Option<EndpointFile>,
}

fn default_rag_k() -> usize {
    10
}
fn default_runs() -> usize {
    3
}
fn default_concurrency() -> usize {
    4
}
fn default_sparql_timeout_secs() -> u64 {
    60
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndpointFile {
    base_url: String,
    model: String,
    #[serde(default)]
    temperature: f64,
    #[serde(default = "default_max_tokens")]
    max_tokens: u32,
    #[serde(default = "default_llm_timeout_secs")]
    timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    max_retries: u32,
    #[serde(default = "default_retry_base_ms")]
    retry_base_ms: u64,
    #[serde(default)]
    api_key: Option<String>,
    /// Name of an environment variable holding the key; preferred over
    /// putting secrets in the file.
    #[serde(default)]
    api_key_env: Option<String>,
}

fn default_max_tokens() -> u32 {
    1024
}
fn default_llm_timeout_secs() -> u64 {
    120
}
fn default_max_retries() -> u32 {
    3
}
fn default_retry_base_ms() -> u64 {
    250
}

/// Global fallback for endpoint API keys.
pub const API_KEY_ENV: &str = "NL2SPARQL_API_KEY";

impl EndpointFile {
    fn into_endpoint(self) -> LlmEndpointConfig {
        let mut cfg = LlmEndpointConfig::new(&self.base_url, &self.model);
        cfg.temperature = self.temperature;
        cfg.max_tokens = self.max_tokens;
        cfg.timeout = Duration::from_secs(self.timeout_secs);
        cfg.max_retries = self.max_retries;
        cfg.retry_base = Duration::from_millis(self.retry_base_ms);
        cfg.api_key = self
            .api_key
            .or_else(|| self.api_key_env.and_then(|var| std::env::var(var).ok()))
            .or_else(|| std::env::var(API_KEY_ENV).ok());
        cfg
    }
}

impl ConfigFile {
    fn into_config(self) -> Result<RunConfig, RunnerError> {
        let strategy: Strategy = self.strategy.parse().map_err(RunnerError::Config)?;
        let sparql_results_format = match self.sparql_results_format.as_deref() {
            None | Some("json") => ResultsFormat::Json,
            Some("tsv") => ResultsFormat::Tsv,
            Some(other) => {
                return Err(RunnerError::Config(format!(
                    "unknown sparql_results_format '{other}' (expected json or tsv)"
                )))
            }
        };
        let sparql_recordings_dir = self
            .sparql_recordings
            .unwrap_or_else(|| self.cache_dir.join("sparql"));
        let config = RunConfig {
            strategy,
            dataset_path: self.dataset,
            sparql_endpoint: self.sparql_endpoint,
            property_catalog_path: self.property_catalog,
            rag_k: self.rag_k,
            runs: self.runs,
            cache_dir: self.cache_dir,
            output_dir: self.output_dir,
            concurrency_limit: self.concurrency,
            offline_replay: self.offline_replay,
            expand_paraphrases: self.expand_paraphrases,
            sparql_timeout: Duration::from_secs(self.sparql_timeout_secs),
            sparql_results_format,
            strict_literals: self.strict_literals,
            sparql_recordings_dir,
            generation: self.generation.into_endpoint(),
            correction: self.correction.map(EndpointFile::into_endpoint),
            embedding: self.embedding.map(EndpointFile::into_endpoint),
            model_epoch: self.model_epoch,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Everything needed to replay a run byte-identically from a populated
/// cache.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub strategy: String,
    pub model: String,
    pub model_epoch: Option<String>,
    pub tokenizer_version: String,
    pub dataset_digest: String,
    pub template_digests: BTreeMap<String, String>,
    pub run_salts: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
    pub config: serde_json::Value,
}

/// Per-category counts plus the per-item detail list, for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub counts: BTreeMap<String, usize>,
    pub items: Vec<ErrorItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorItem {
    pub run: usize,
    pub id: String,
    pub category: ErrorCategory,
    pub message: String,
}

impl ErrorBreakdown {
    pub fn count(&self, category: ErrorCategory) -> usize {
        self.counts.get(category.name()).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    fn from_records(records: &[ItemRecord]) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for category in ErrorCategory::ALL {
            counts.insert(category.name().to_string(), 0);
        }
        let mut items = Vec::with_capacity(records.len());
        for record in records {
            *counts.entry(record.category.name().to_string()).or_insert(0) += 1;
            items.push(ErrorItem {
                run: record.run,
                id: record.id.clone(),
                category: record.category,
                message: record.message.clone(),
            });
        }
        Self { counts, items }
    }
}

/// One processed item, the unit of the checkpoint log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemRecord {
    pub run: usize,
    pub id: String,
    pub generated_query: String,
    pub gold_query: String,
    pub category: ErrorCategory,
    pub status: ExecutionStatus,
    pub matched: bool,
    pub corrected: bool,
    pub message: String,
    pub generated_results: Option<NormalizedResultSet>,
    pub gold_results: Option<NormalizedResultSet>,
}

#[derive(Debug)]
pub struct PipelineResult {
    pub aggregate: RunAggregate,
    pub per_run: Vec<MetricReport>,
    /// Breakdown of the final run (runs are identical at temperature 0
    /// with a warm cache; all runs appear in errors.csv).
    pub breakdown: ErrorBreakdown,
    pub breakdown_per_run: Vec<ErrorBreakdown>,
    pub manifest: RunManifest,
}

/// Resources resolved from a [`RunConfig`]: dataset, catalog, clients.
pub struct PipelineContext {
    pub config: RunConfig,
    pub split: DatasetSplit,
    pub test_items: Vec<QAExample>,
    pub catalog: Vec<PropertyCatalogEntry>,
    pub generation: LlmClient,
    pub correction: Option<LlmClient>,
    embedding_endpoint: Option<LlmClient>,
    lexical: LexicalEmbedder,
    pub sparql: SparqlClient,
    pub dataset_digest: String,
}

impl PipelineContext {
    pub fn new(config: RunConfig) -> Result<Self, RunnerError> {
        config.validate()?;
        let raw = std::fs::read(&config.dataset_path).map_err(|e| {
            RunnerError::Config(format!(
                "cannot read dataset {}: {e}",
                config.dataset_path.display()
            ))
        })?;
        let dataset_digest = hex::encode(Sha256::digest(&raw));
        let split = dataset::load_dataset(&config.dataset_path, DatasetFormat::SciqaJson)
            .map_err(|e| RunnerError::Config(e.to_string()))?;
        let test_items = if config.expand_paraphrases {
            dataset::expand_paraphrases(&split.test)
        } else {
            split.test.clone()
        };
        if test_items.is_empty() {
            return Err(RunnerError::Config("test split is empty".into()));
        }
        if config.strategy.uses_one_shot() && split.train.is_empty() {
            return Err(RunnerError::Config(
                "one_shot strategy requires a non-empty train split".into(),
            ));
        }
        let catalog = match (&config.property_catalog_path, config.strategy.uses_rag()) {
            (Some(path), true) => {
                load_property_catalog(path).map_err(|e| RunnerError::Config(e.to_string()))?
            }
            _ => Vec::new(),
        };
        if config.strategy.uses_rag() && catalog.is_empty() {
            return Err(RunnerError::Config("property catalog is empty".into()));
        }

        let llm_cache = config.cache_dir.join("llm");
        let build_client = |cfg: &LlmEndpointConfig| -> Result<LlmClient, RunnerError> {
            if config.offline_replay {
                LlmClient::offline(cfg.clone(), &llm_cache)
            } else {
                LlmClient::new(cfg.clone(), &llm_cache)
            }
            .map_err(|e| RunnerError::Config(e.to_string()))
        };
        let generation = build_client(&config.generation)?;
        let correction = config
            .correction
            .as_ref()
            .map(&build_client)
            .transpose()?;
        let embedding_endpoint = config
            .embedding
            .as_ref()
            .map(&build_client)
            .transpose()?;

        let exec_options = ExecOptions {
            timeout: config.sparql_timeout,
            format: config.sparql_results_format,
            strict_literals: config.strict_literals,
            ..ExecOptions::default()
        };
        let sparql = if config.offline_replay {
            SparqlClient::replay(&config.sparql_recordings_dir, exec_options)
        } else {
            SparqlClient::recording(
                &config.sparql_endpoint,
                exec_options,
                &config.sparql_recordings_dir,
            )
        };

        Ok(Self {
            config,
            split,
            test_items,
            catalog,
            generation,
            correction,
            embedding_endpoint,
            lexical: LexicalEmbedder::default(),
            sparql,
            dataset_digest,
        })
    }

    fn embedder(&self) -> &(dyn EmbeddingProvider + Sync) {
        match &self.embedding_endpoint {
            Some(client) => client,
            None => &self.lexical,
        }
    }

    /// Builds the prompt for one question according to the strategy.
    pub fn build_prompt(&self, question: &str) -> Result<PromptInstance, RunnerError> {
        let strategy = self.config.strategy;
        match strategy {
            Strategy::ZeroShot | Strategy::Ft => build_zero_shot_for(strategy, question)
                .map_err(|e| RunnerError::Runtime(e.to_string())),
            Strategy::OneShot => {
                let example = select_one_shot_example(question, &self.split.train, self.embedder())
                    .map_err(|e| RunnerError::Runtime(e.to_string()))?;
                build_one_shot_prompt(question, example)
                    .map_err(|e| RunnerError::Runtime(e.to_string()))
            }
            Strategy::ZeroShotRag | Strategy::FtRag => {
                let properties = retrieve_properties(
                    question,
                    &self.catalog,
                    self.config.rag_k,
                    self.embedder(),
                )
                .map_err(|e| RunnerError::Runtime(e.to_string()))?;
                build_rag_for(strategy, question, &properties)
                    .map_err(|e| RunnerError::Runtime(e.to_string()))
            }
        }
    }

    /// Runs one test item end to end for one run salt.
    fn process_item(
        &self,
        example: &QAExample,
        run: usize,
        salt: &str,
    ) -> Result<ItemRecord, RunnerError> {
        let prompt = self.build_prompt(&example.question)?;
        let generation = self
            .generation
            .generate(&prompt, salt)
            .map_err(abort_on_llm_error)?;

        let (mut query, extract_failed) = match extract_query(&generation.raw_output) {
            Ok(text) => (text, false),
            Err(_) => (generation.raw_output.trim().to_string(), true),
        };
        let mut message = String::new();
        let mut corrected = false;
        let mut diagnostics: Vec<Diagnostic> = Vec::new();

        if extract_failed {
            message = "no SPARQL query found in the output".to_string();
            diagnostics.push(Diagnostic::new(
                crate::sparql::DiagnosticCode::GeneralSyntax,
                message.clone(),
                None,
            ));
        } else {
            query = clean(&query).output;
            diagnostics = parse_and_validate(&query);
            if !diagnostics.is_empty() {
                if let Some(correction_client) = &self.correction {
                    let adapter = crate::llm::SaltedGenerator {
                        client: correction_client,
                        salt,
                    };
                    let outcome = llm_correct(&query, &diagnostics, &adapter)
                        .map_err(|e| match e {
                            crate::postprocess::PostprocessError::Client(inner) => {
                                abort_on_llm_error(inner)
                            }
                            other => RunnerError::Runtime(other.to_string()),
                        })?;
                    if outcome.corrected {
                        query = outcome.query;
                        corrected = true;
                        diagnostics = Vec::new();
                    }
                }
            }
            if let Some(first) = diagnostics.first() {
                message = first.to_string();
            }
        }

        let gen_ast = if diagnostics.is_empty() {
            parse(&query).ok()
        } else {
            None
        };

        // Parse/validation failures are never sent to the endpoint.
        let (status, outcome, generated_results) = if diagnostics.is_empty() {
            let outcome = self.sparql.execute(&query);
            if outcome.status != ExecutionStatus::Success && message.is_empty() {
                message = outcome.message.clone();
            }
            let normalized = outcome.table.as_ref().map(normalize_results);
            (outcome.status, Some(outcome), normalized)
        } else {
            (ExecutionStatus::SyntaxError, None, None)
        };

        let gold_results = self.gold_results(example);
        let matched = status == ExecutionStatus::Success
            && generated_results
                .as_ref()
                .is_some_and(|lines| !lines.lines.is_empty())
            && gold_results
                .as_ref()
                .is_some_and(|gold| generated_results.as_ref() == Some(gold));

        let gold_ast = parse(&example.gold_query).ok();
        let bundle = EvaluationBundle {
            diagnostics: &diagnostics,
            gen_ast: gen_ast.as_ref(),
            outcome: outcome.as_ref(),
            matched: Some(matched),
        };
        let category = classify(&bundle, gold_ast.as_ref())
            .map_err(|e| RunnerError::Runtime(e.to_string()))?;

        Ok(ItemRecord {
            run,
            id: example.id.clone(),
            generated_query: query,
            gold_query: example.gold_query.clone(),
            category,
            status,
            matched,
            corrected,
            message,
            generated_results,
            gold_results,
        })
    }

    /// Gold result set: from the dataset record when present, otherwise
    /// by executing the gold query (recorded/replayed like any other).
    fn gold_results(&self, example: &QAExample) -> Option<NormalizedResultSet> {
        if let Some(table) = &example.gold_results {
            return Some(normalize_results(table));
        }
        let outcome = self.sparql.execute(&example.gold_query);
        outcome.table.as_ref().map(normalize_results)
    }
}

fn parse_and_validate(query: &str) -> Vec<Diagnostic> {
    match parse(query) {
        Ok(ast) => validate_aggregation(&ast),
        Err(diags) => diags,
    }
}

/// LLM failures abort the run (resumable); everything else is per-item.
fn abort_on_llm_error(error: LlmError) -> RunnerError {
    RunnerError::Runtime(format!("generation endpoint failure: {error}"))
}

/// Work-stealing loop over the test items with a bounded worker count.
/// Results come back in item order.
fn run_items<F>(items: &[QAExample], workers: usize, f: F) -> Result<Vec<ItemRecord>, RunnerError>
where
    F: Fn(&QAExample) -> Result<Option<ItemRecord>, RunnerError> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ItemRecord>>> = Mutex::new(vec![None; items.len()]);
    let first_error: Mutex<Option<RunnerError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(items.len().max(1)) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= items.len() {
                    return;
                }
                if first_error.lock().unwrap().is_some() {
                    return;
                }
                match f(&items[idx]) {
                    Ok(Some(record)) => {
                        slots.lock().unwrap()[idx] = Some(record);
                    }
                    Ok(None) => {}
                    Err(e) => {
                        let mut guard = first_error.lock().unwrap();
                        if guard.is_none() {
                            *guard = Some(e);
                        }
                        return;
                    }
                }
            });
        }
    });
    if let Some(error) = first_error.into_inner().unwrap() {
        return Err(error);
    }
    Ok(slots.into_inner().unwrap().into_iter().flatten().collect())
}

/// Append-only per-item log; `run` resumes from it after an abort.
struct Checkpoint {
    path: PathBuf,
    completed: HashMap<(usize, String), ItemRecord>,
    writer: Mutex<std::fs::File>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    kind: String,
    config_digest: String,
}

impl Checkpoint {
    fn open(dir: &Path, config_digest: &str) -> Result<Self, RunnerError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| RunnerError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join("checkpoint.jsonl");
        let mut completed = HashMap::new();
        if path.exists() {
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| RunnerError::Runtime(format!("cannot read checkpoint: {e}")))?;
            let mut lines = raw.lines();
            if let Some(first) = lines.next() {
                let header: CheckpointHeader = serde_json::from_str(first).map_err(|e| {
                    RunnerError::Runtime(format!("corrupt checkpoint header: {e}"))
                })?;
                if header.config_digest != config_digest {
                    return Err(RunnerError::Config(
                        "output_dir holds a checkpoint from a different configuration; \
                         choose a fresh output_dir or delete checkpoint.jsonl"
                            .into(),
                    ));
                }
            }
            for line in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let record: ItemRecord = serde_json::from_str(line)
                    .map_err(|e| RunnerError::Runtime(format!("corrupt checkpoint line: {e}")))?;
                completed.insert((record.run, record.id.clone()), record);
            }
        }
        let fresh = !path.exists();
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| RunnerError::Runtime(format!("cannot open checkpoint: {e}")))?;
        let checkpoint = Self {
            path,
            completed,
            writer: Mutex::new(file),
        };
        if fresh {
            checkpoint.append_line(
                &serde_json::to_string(&CheckpointHeader {
                    kind: "header".into(),
                    config_digest: config_digest.to_string(),
                })
                .expect("serialize header"),
            )?;
        }
        Ok(checkpoint)
    }

    fn get(&self, run: usize, id: &str) -> Option<ItemRecord> {
        self.completed.get(&(run, id.to_string())).cloned()
    }

    fn record(&self, record: &ItemRecord) -> Result<(), RunnerError> {
        self.append_line(&serde_json::to_string(record).expect("serialize record"))
    }

    fn append_line(&self, line: &str) -> Result<(), RunnerError> {
        let mut file = self.writer.lock().unwrap();
        writeln!(file, "{line}")
            .map_err(|e| RunnerError::Runtime(format!("cannot append to {}: {e}", self.path.display())))
    }
}

fn template_digests() -> BTreeMap<String, String> {
    let mut digests = BTreeMap::new();
    for (name, text) in [
        ("generate", include_str!("../../templates/generate.txt")),
        ("one_shot", include_str!("../../templates/one_shot.txt")),
        ("rag", include_str!("../../templates/rag.txt")),
        ("correct", include_str!("../../templates/correct.txt")),
    ] {
        digests.insert(
            name.to_string(),
            hex::encode(Sha256::digest(text.as_bytes())),
        );
    }
    digests
}

fn config_snapshot(config: &RunConfig) -> serde_json::Value {
    serde_json::json!({
        "strategy": config.strategy.label(),
        "dataset": config.dataset_path,
        "sparql_endpoint": config.sparql_endpoint,
        "property_catalog": config.property_catalog_path,
        "rag_k": config.rag_k,
        "runs": config.runs,
        "cache_dir": config.cache_dir,
        "output_dir": config.output_dir,
        "concurrency": config.concurrency_limit,
        "offline_replay": config.offline_replay,
        "expand_paraphrases": config.expand_paraphrases,
        "sparql_timeout_secs": config.sparql_timeout.as_secs(),
        "sparql_results_format": config.sparql_results_format,
        "strict_literals": config.strict_literals,
        "sparql_recordings": config.sparql_recordings_dir,
        // API keys are deliberately absent from snapshots.
        "generation": endpoint_snapshot(&config.generation),
        "correction": config.correction.as_ref().map(endpoint_snapshot),
        "embedding": config.embedding.as_ref().map(endpoint_snapshot),
        "model_epoch": config.model_epoch,
    })
}

fn endpoint_snapshot(cfg: &LlmEndpointConfig) -> serde_json::Value {
    serde_json::json!({
        "base_url": cfg.base_url,
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "timeout_secs": cfg.timeout.as_secs(),
        "max_retries": cfg.max_retries,
    })
}

/// Drives the full pipeline: N runs with distinct salts, per-run scoring,
/// cross-run aggregation, and artifact emission into `output_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineResult, RunnerError> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let context = PipelineContext::new(config.clone())?;
    let config = &context.config;

    let config_digest = hex::encode(Sha256::digest(
        serde_json::to_vec(&config_snapshot(config)).expect("serialize config"),
    ));
    let checkpoint = Checkpoint::open(&config.output_dir, &config_digest)?;

    let salts: Vec<String> = (1..=config.runs).map(|i| format!("run{i}")).collect();
    let mut per_run_records: Vec<Vec<ItemRecord>> = Vec::with_capacity(config.runs);
    for (run_idx, salt) in salts.iter().enumerate() {
        let run = run_idx + 1;
        let records = run_items(
            &context.test_items,
            config.concurrency_limit,
            |example| {
                if let Some(done) = checkpoint.get(run, &example.id) {
                    return Ok(Some(done));
                }
                let record = context.process_item(example, run, salt)?;
                checkpoint.record(&record)?;
                Ok(Some(record))
            },
        )?;
        per_run_records.push(records);
    }

    let mut per_run = Vec::with_capacity(config.runs);
    let mut breakdown_per_run = Vec::with_capacity(config.runs);
    for records in &per_run_records {
        let scored: Vec<ScoredItem> = records
            .iter()
            .map(|r| ScoredItem {
                id: r.id.clone(),
                generated_query: r.generated_query.clone(),
                gold_query: r.gold_query.clone(),
                status: r.status,
                generated_results: r.generated_results.clone(),
                gold_results: r.gold_results.clone(),
            })
            .collect();
        per_run.push(score_run(&scored).map_err(|e| RunnerError::Runtime(e.to_string()))?);
        breakdown_per_run.push(ErrorBreakdown::from_records(records));
    }
    let aggregate = aggregate_runs(&per_run).map_err(|e| RunnerError::Runtime(e.to_string()))?;
    let breakdown = breakdown_per_run
        .last()
        .cloned()
        .expect("at least one run");

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        strategy: config.strategy.label().to_string(),
        model: config.generation.model_name.clone(),
        model_epoch: config.model_epoch.clone(),
        tokenizer_version: TOKENIZER_VERSION.to_string(),
        dataset_digest: context.dataset_digest.clone(),
        template_digests: template_digests(),
        run_salts: salts,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        config: config_snapshot(config),
    };

    let result = PipelineResult {
        aggregate,
        per_run,
        breakdown,
        breakdown_per_run,
        manifest,
    };
    emit_report(&result, config, &config.output_dir)?;
    Ok(result)
}
