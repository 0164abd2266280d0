//! Loading and validation of SciQA-format benchmark records.
//!
//! The canonical file format is a single UTF-8 JSON object
//! `{"train": [...], "test": [...]}`; see the README for the full record
//! schema and for how to convert the upstream benchmark layout into it.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::execution::ResultTable;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read dataset file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    MalformedFile(String),
    #[error("duplicate example id '{0}'")]
    DuplicateId(String),
    #[error("invalid example '{id}': {violations:?}")]
    InvalidExample { id: String, violations: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Handcrafted,
    AutoGenerated,
}

/// One benchmark record: a question, its paraphrases, the gold query, and
/// optionally the gold results. When `gold_results` is absent the harness
/// executes the gold query at run time instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAExample {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub paraphrases: Vec<String>,
    pub gold_query: String,
    #[serde(default)]
    pub gold_results: Option<ResultTable>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<QAExample>,
    pub test: Vec<QAExample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    SciqaJson,
}

/// Loads and fully validates a dataset file. Records come back in file
/// order; loading the same bytes twice yields identical splits.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<DatasetSplit, DatasetError> {
    match format {
        DatasetFormat::SciqaJson => load_sciqa_json(path),
    }
}

fn load_sciqa_json(path: &Path) -> Result<DatasetSplit, DatasetError> {
    let raw = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| DatasetError::MalformedFile(format!("invalid JSON: {e}")))?;
    let object = value
        .as_object()
        .ok_or_else(|| DatasetError::MalformedFile("top level must be an object".into()))?;
    let mut split = DatasetSplit {
        train: Vec::new(),
        test: Vec::new(),
    };
    for key in ["train", "test"] {
        let records = object
            .get(key)
            .ok_or_else(|| DatasetError::MalformedFile(format!("missing required key '{key}'")))?;
        let parsed: Vec<QAExample> = serde_json::from_value(records.clone()).map_err(|e| {
            DatasetError::MalformedFile(format!("invalid record under '{key}': {e}"))
        })?;
        if key == "train" {
            split.train = parsed;
        } else {
            split.test = parsed;
        }
    }

    let mut seen = HashSet::new();
    for example in split.train.iter().chain(&split.test) {
        if !seen.insert(example.id.clone()) {
            return Err(DatasetError::DuplicateId(example.id.clone()));
        }
        let violations = validate_example(example);
        if !violations.is_empty() {
            return Err(DatasetError::InvalidExample {
                id: example.id.clone(),
                violations,
            });
        }
    }
    Ok(split)
}

/// Checks the per-record invariants; returns human-readable violations
/// instead of failing, so callers can report them in bulk.
pub fn validate_example(example: &QAExample) -> Vec<String> {
    let mut violations = Vec::new();
    if example.id.is_empty() {
        violations.push("id empty".to_string());
    }
    if example.question.trim().is_empty() {
        violations.push("question empty".to_string());
    }
    if example.gold_query.trim().is_empty() {
        violations.push("gold_query empty".to_string());
    }
    if let Some(table) = &example.gold_results {
        if table.rows.iter().any(|row| row.len() != table.vars.len()) {
            violations.push("gold_results rows not aligned with vars".to_string());
        }
    }
    violations
}

/// Expands paraphrases into separate test items (`id#p1`, `id#p2`, ...),
/// sharing the gold query and results. Off by default in the pipeline.
pub fn expand_paraphrases(examples: &[QAExample]) -> Vec<QAExample> {
    let mut expanded = Vec::with_capacity(examples.len());
    for example in examples {
        expanded.push(example.clone());
        for (idx, paraphrase) in example.paraphrases.iter().enumerate() {
            let mut copy = example.clone();
            copy.id = format!("{}#p{}", example.id, idx + 1);
            copy.question = paraphrase.clone();
            copy.paraphrases = Vec::new();
            expanded.push(copy);
        }
    }
    expanded
}
