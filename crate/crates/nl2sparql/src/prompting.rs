//! Prompt construction for every strategy, plus the similarity retrieval
//! that feeds one-shot selection and property RAG.
//!
//! Prompt assembly is pure: the same inputs always produce byte-identical
//! prompts, because generation cache keys hash the prompt text. Lines use
//! `\n` endings and carry no trailing whitespace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::QAExample;

const GENERATE_TEMPLATE: &str = include_str!("../templates/generate.txt");
const ONE_SHOT_TEMPLATE: &str = include_str!("../templates/one_shot.txt");
const RAG_TEMPLATE: &str = include_str!("../templates/rag.txt");

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("property catalog is empty")]
    EmptyCatalog,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("RAG context is empty")]
    EmptyContext,
    #[error("embedding provider error: {0}")]
    Provider(String),
    #[error("invalid property catalog: {0}")]
    Catalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    ZeroShotRag,
    OneShot,
    Ft,
    FtRag,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero_shot",
            Strategy::ZeroShotRag => "zero_shot_rag",
            Strategy::OneShot => "one_shot",
            Strategy::Ft => "ft",
            Strategy::FtRag => "ft_rag",
        }
    }

    pub fn uses_rag(&self) -> bool {
        matches!(self, Strategy::ZeroShotRag | Strategy::FtRag)
    }

    pub fn uses_one_shot(&self) -> bool {
        matches!(self, Strategy::OneShot)
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero_shot" => Ok(Strategy::ZeroShot),
            "zero_shot_rag" => Ok(Strategy::ZeroShotRag),
            "one_shot" => Ok(Strategy::OneShot),
            "ft" => Ok(Strategy::Ft),
            "ft_rag" => Ok(Strategy::FtRag),
            other => Err(format!(
                "unknown strategy '{other}' (expected zero_shot, zero_shot_rag, one_shot, ft, or ft_rag)"
            )),
        }
    }
}

/// Which inputs went into a prompt, for manifests and reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptProvenance {
    pub example_id: Option<String>,
    pub property_uris: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub strategy: Strategy,
    pub system_text: String,
    pub user_text: String,
    pub provenance: PromptProvenance,
}

/// Entry of the curated ORKG property catalog used for RAG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCatalogEntry {
    pub uri: String,
    pub label: String,
}

/// Minimal absolute-IRI shape check: a scheme, a colon, and no whitespace
/// or characters that are illegal inside IRI references.
pub fn is_absolute_iri(text: &str) -> bool {
    let Some(colon) = text.find(':') else {
        return false;
    };
    let scheme = &text[..colon];
    let mut chars = scheme.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !first.is_ascii_alphabetic() {
        return false;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return false;
    }
    !text.chars().any(|c| {
        c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`')
    })
}

/// Reads a property catalog: one JSON object `{"uri", "label"}` per line.
pub fn load_property_catalog(path: &std::path::Path) -> Result<Vec<PropertyCatalogEntry>, PromptError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| PromptError::Catalog(format!("failed to read {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: PropertyCatalogEntry = serde_json::from_str(line)
            .map_err(|e| PromptError::Catalog(format!("line {}: {e}", idx + 1)))?;
        if !is_absolute_iri(&entry.uri) {
            return Err(PromptError::Catalog(format!(
                "line {}: '{}' is not an absolute IRI",
                idx + 1,
                entry.uri
            )));
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Fixed-length embedding; entries must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Anything that can embed a batch of texts into equal-length vectors.
pub trait EmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, PromptError>;
}

/// Deterministic offline fallback: token multisets hashed into a
/// fixed-dimension count vector. Not a semantic embedding; it exists so
/// retrieval and selection run reproducibly without a model endpoint.
#[derive(Debug, Clone)]
pub struct LexicalEmbedder {
    pub dimension: usize,
}

impl Default for LexicalEmbedder {
    fn default() -> Self {
        Self { dimension: 1024 }
    }
}

impl EmbeddingProvider for LexicalEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, PromptError> {
        Ok(texts
            .iter()
            .map(|text| {
                let mut values = vec![0.0; self.dimension];
                for token in lexical_tokens(text) {
                    let bucket = (fnv1a(token.as_bytes()) % self.dimension as u64) as usize;
                    values[bucket] += 1.0;
                }
                EmbeddingVector::new(values)
            })
            .collect())
    }
}

fn lexical_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// `dot(a, b) / (|a| * |b|)`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, PromptError> {
    if a.len() != b.len() {
        return Err(PromptError::DimensionMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(PromptError::ZeroVector);
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Strips trailing whitespace per line and the trailing newline the file
/// ends with, so prompts match the cache-key convention.
pub(crate) fn normalize_template(template: &str) -> String {
    template
        .lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
        .trim_end()
        .to_string()
}

fn require_question(question: &str) -> Result<(), PromptError> {
    if question.trim().is_empty() {
        Err(PromptError::EmptyQuestion)
    } else {
        Ok(())
    }
}

/// Instruction template with the question substituted; used by both the
/// zero-shot and fine-tuned strategies.
pub fn build_zero_shot_prompt(question: &str) -> Result<PromptInstance, PromptError> {
    build_zero_shot_for(Strategy::ZeroShot, question)
}

pub(crate) fn build_zero_shot_for(
    strategy: Strategy,
    question: &str,
) -> Result<PromptInstance, PromptError> {
    require_question(question)?;
    let user_text = normalize_template(GENERATE_TEMPLATE).replace("{question}", question);
    Ok(PromptInstance {
        strategy,
        system_text: String::new(),
        user_text,
        provenance: PromptProvenance::default(),
    })
}

/// Picks the training example whose question embedding is most
/// cosine-similar to the input question; ties break on the smaller id.
pub fn select_one_shot_example<'a>(
    question: &str,
    train: &'a [QAExample],
    provider: &dyn EmbeddingProvider,
) -> Result<&'a QAExample, PromptError> {
    if train.is_empty() {
        return Err(PromptError::EmptyTrainSet);
    }
    let mut texts = Vec::with_capacity(train.len() + 1);
    texts.push(question.to_string());
    texts.extend(train.iter().map(|e| e.question.clone()));
    let vectors = provider.embed(&texts)?;
    let (query_vector, rest) = vectors.split_first().expect("non-empty batch");

    let mut best: Option<(f64, &QAExample)> = None;
    for (example, vector) in train.iter().zip(rest) {
        let similarity = cosine_similarity(query_vector, vector)?;
        let better = match best {
            None => true,
            Some((best_sim, best_ex)) => {
                similarity > best_sim || (similarity == best_sim && example.id < best_ex.id)
            }
        };
        if better {
            best = Some((similarity, example));
        }
    }
    Ok(best.expect("non-empty train set").1)
}

/// Instruction block, then the demonstration pair, then the input
/// question slot.
pub fn build_one_shot_prompt(
    question: &str,
    example: &QAExample,
) -> Result<PromptInstance, PromptError> {
    require_question(question)?;
    let user_text = normalize_template(ONE_SHOT_TEMPLATE)
        .replace("{example_question}", &example.question)
        .replace("{example_query}", example.gold_query.trim_end())
        .replace("{question}", question);
    Ok(PromptInstance {
        strategy: Strategy::OneShot,
        system_text: String::new(),
        user_text,
        provenance: PromptProvenance {
            example_id: Some(example.id.clone()),
            property_uris: Vec::new(),
        },
    })
}

/// The k catalog entries whose label embeddings are most similar to the
/// question, in descending similarity; ties break on the smaller uri.
pub fn retrieve_properties<'a>(
    question: &str,
    catalog: &'a [PropertyCatalogEntry],
    k: usize,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<&'a PropertyCatalogEntry>, PromptError> {
    if catalog.is_empty() {
        return Err(PromptError::EmptyCatalog);
    }
    if k == 0 {
        return Err(PromptError::ZeroK);
    }
    let mut texts = Vec::with_capacity(catalog.len() + 1);
    texts.push(question.to_string());
    texts.extend(catalog.iter().map(|e| e.label.clone()));
    let vectors = provider.embed(&texts)?;
    let (query_vector, rest) = vectors.split_first().expect("non-empty batch");

    let mut ranked: Vec<(f64, &PropertyCatalogEntry)> = Vec::with_capacity(catalog.len());
    for (entry, vector) in catalog.iter().zip(rest) {
        // Labels that embed to nothing (e.g. punctuation-only) rank last.
        let similarity = cosine_similarity(query_vector, vector).unwrap_or(f64::NEG_INFINITY);
        ranked.push((similarity, entry));
    }
    ranked.sort_by(|(sa, ea), (sb, eb)| {
        sb.partial_cmp(sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ea.uri.cmp(&eb.uri))
    });
    Ok(ranked.into_iter().take(k).map(|(_, e)| e).collect())
}

/// Property context block in retrieval order, then the instruction and
/// the question.
pub fn build_rag_prompt(
    question: &str,
    properties: &[&PropertyCatalogEntry],
) -> Result<PromptInstance, PromptError> {
    build_rag_for(Strategy::ZeroShotRag, question, properties)
}

pub(crate) fn build_rag_for(
    strategy: Strategy,
    question: &str,
    properties: &[&PropertyCatalogEntry],
) -> Result<PromptInstance, PromptError> {
    require_question(question)?;
    if properties.is_empty() {
        return Err(PromptError::EmptyContext);
    }
    let lines: Vec<String> = properties
        .iter()
        .map(|p| format!("{} — {}", p.uri, p.label))
        .collect();
    let user_text = normalize_template(RAG_TEMPLATE)
        .replace("{properties}", &lines.join("\n"))
        .replace("{question}", question);
    Ok(PromptInstance {
        strategy,
        system_text: String::new(),
        user_text,
        provenance: PromptProvenance {
            example_id: None,
            property_uris: properties.iter().map(|p| p.uri.clone()).collect(),
        },
    })
}
