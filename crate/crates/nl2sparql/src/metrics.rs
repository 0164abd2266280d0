//! Query-accuracy (BLEU-4, ROUGE-1/2/L) and result-accuracy (relaxed exact
//! match) scoring, plus mean/std aggregation over repeated runs.
//!
//! The tokenizer below is the single tokenization used by BLEU and ROUGE.
//! It is deliberately simple and pinned: scores are only comparable under a
//! fixed tokenization, so its version is recorded in run manifests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::execution::{ExecutionStatus, NormalizedResultSet};

/// Identifier for the tokenization convention, recorded in run manifests.
pub const TOKENIZER_VERSION: &str = "whitespace-punct-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot score an empty run")]
    EmptyRun,
    #[error("cannot aggregate an empty list of reports")]
    EmptyList,
}

/// Ordered token sequence produced by [`tokenize_query`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits query text into tokens: quoted literals stay single tokens, each
/// of `{ } ( ) . , ; = < >` becomes a standalone token, everything else
/// splits on whitespace. Case is preserved.
pub fn tokenize_query(text: &str) -> TokenSequence {
    const PUNCT: &[char] = &['{', '}', '(', ')', '.', ',', ';', '=', '<', '>'];
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '"' || c == '\'' {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            let quote = c;
            let mut lit = String::new();
            lit.push(quote);
            while let Some(&n) = chars.peek() {
                chars.next();
                lit.push(n);
                if n == '\\' {
                    if let Some(&esc) = chars.peek() {
                        chars.next();
                        lit.push(esc);
                    }
                } else if n == quote {
                    break;
                }
            }
            tokens.push(lit);
        } else if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if PUNCT.contains(&c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenSequence::new(tokens)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n && n > 0 {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU-4: geometric mean of modified n-gram precisions for n = 1..4 with
/// add-epsilon smoothing on zero-count precisions, times the brevity
/// penalty `exp(1 - r/c)` when the candidate is shorter than the reference.
/// An empty candidate scores 0.
pub fn bleu4(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    const EPS: f64 = 1e-9;
    let c = candidate.len();
    let r = reference.len();
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand = ngram_counts(&candidate.tokens, n);
        let refc = ngram_counts(&reference.tokens, n);
        let clipped: u64 = cand
            .iter()
            .map(|(gram, count)| (*count).min(refc.get(gram).copied().unwrap_or(0)))
            .sum();
        let total = if c >= n { (c - n + 1) as u64 } else { 0 };
        let precision = if clipped == 0 {
            (clipped as f64 + EPS) / (total as f64 + EPS)
        } else {
            clipped as f64 / total as f64
        };
        log_sum += precision.ln();
    }
    let geo_mean = (log_sum / 4.0).exp();
    let brevity_penalty = if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    brevity_penalty * geo_mean
}

/// ROUGE-N (n = 1 or 2): F1 over the n-gram multiset overlap. Returns 0
/// when either sequence has no n-grams.
pub fn rouge_n(candidate: &TokenSequence, reference: &TokenSequence, n: usize) -> f64 {
    assert!(n == 1 || n == 2, "rouge_n supports n = 1 or 2");
    let cand = ngram_counts(&candidate.tokens, n);
    let refc = ngram_counts(&reference.tokens, n);
    let cand_total: u64 = cand.values().sum();
    let ref_total: u64 = refc.values().sum();
    if cand_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let overlap: u64 = cand
        .iter()
        .map(|(gram, count)| (*count).min(refc.get(gram).copied().unwrap_or(0)))
        .sum();
    let precision = overlap as f64 / cand_total as f64;
    let recall = overlap as f64 / ref_total as f64;
    if precision + recall == 0.0 {
        return 0.0;
    }
    2.0 * precision * recall / (precision + recall)
}

/// Length of the longest common subsequence, rolling two-row DP.
fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L: F1 over the longest common subsequence. Returns 0 when either
/// sequence is empty.
pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    let c = candidate.len();
    let r = reference.len();
    if c == 0 || r == 0 {
        return 0.0;
    }
    let l = lcs_len(&candidate.tokens, &reference.tokens) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let precision = l / c as f64;
    let recall = l / r as f64;
    2.0 * precision * recall / (precision + recall)
}

/// True iff both normalized result sets contain exactly the same lines.
pub fn relaxed_em_pair(gen: &NormalizedResultSet, gold: &NormalizedResultSet) -> bool {
    gen.lines == gold.lines
}

/// Everything needed to score one test item in one run.
#[derive(Debug, Clone)]
pub struct ScoredItem {
    pub id: String,
    /// Final query text sent to the scorer (cleaned, post-correction).
    pub generated_query: String,
    pub gold_query: String,
    pub status: ExecutionStatus,
    /// Rows the generated query returned, when it executed successfully.
    pub generated_results: Option<NormalizedResultSet>,
    /// Gold rows, when available (from the dataset or gold execution).
    pub gold_results: Option<NormalizedResultSet>,
}

/// Per-item metric record carried inside a [`MetricReport`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ItemScore {
    pub id: String,
    pub bleu4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub status: ExecutionStatus,
    pub matched: bool,
}

/// The six headline metrics, used for per-run reports and for mean/std
/// aggregates.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
pub struct MetricVector {
    pub bleu4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub relaxed_em_success: f64,
    pub relaxed_em_all: f64,
}

impl MetricVector {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.bleu4,
            self.rouge1,
            self.rouge2,
            self.rouge_l,
            self.relaxed_em_success,
            self.relaxed_em_all,
        ]
    }

    pub fn from_array(values: [f64; 6]) -> Self {
        Self {
            bleu4: values[0],
            rouge1: values[1],
            rouge2: values[2],
            rouge_l: values[3],
            relaxed_em_success: values[4],
            relaxed_em_all: values[5],
        }
    }
}

/// Scores and bookkeeping for one full run over the test set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub scores: MetricVector,
    pub n_total: usize,
    /// Items that executed successfully and returned at least one row.
    pub n_success: usize,
    /// Items whose result set equals the gold result set.
    pub n_match: usize,
    /// Items rejected by parsing, validation, or the endpoint's parser.
    pub n_syntax_fail: usize,
    /// Items that executed successfully but returned zero rows.
    pub n_empty: usize,
    /// Items lost to transport errors or timeouts.
    pub n_failed_other: usize,
    pub per_item: Vec<ItemScore>,
}

/// Field-wise mean and population standard deviation over repeated runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunAggregate {
    pub mean: MetricVector,
    pub std: MetricVector,
    pub runs: usize,
}

/// Scores one run. BLEU/ROUGE are averaged arithmetically over all items;
/// `relaxed_em_success` counts matches among items that executed
/// successfully with non-empty results, `relaxed_em_all` over the whole
/// set with failed or empty executions counting as non-matches.
pub fn score_run(items: &[ScoredItem]) -> Result<MetricReport, MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let n_total = items.len();
    let mut per_item = Vec::with_capacity(n_total);
    let mut sums = [0.0f64; 4];
    let mut n_success = 0;
    let mut n_match = 0;
    let mut n_syntax_fail = 0;
    let mut n_empty = 0;
    let mut n_failed_other = 0;

    for item in items {
        let cand = tokenize_query(&item.generated_query);
        let gold = tokenize_query(&item.gold_query);
        let scores = [
            bleu4(&cand, &gold),
            rouge_n(&cand, &gold, 1),
            rouge_n(&cand, &gold, 2),
            rouge_l(&cand, &gold),
        ];
        for (sum, s) in sums.iter_mut().zip(scores) {
            *sum += s;
        }

        let non_empty = item
            .generated_results
            .as_ref()
            .is_some_and(|r| !r.lines.is_empty());
        let mut matched = false;
        match item.status {
            ExecutionStatus::Success if non_empty => {
                n_success += 1;
                if let (Some(gen), Some(gold)) = (&item.generated_results, &item.gold_results) {
                    if relaxed_em_pair(gen, gold) {
                        matched = true;
                        n_match += 1;
                    }
                }
            }
            ExecutionStatus::Success => n_empty += 1,
            ExecutionStatus::SyntaxError => n_syntax_fail += 1,
            ExecutionStatus::TransportError | ExecutionStatus::Timeout => n_failed_other += 1,
        }

        per_item.push(ItemScore {
            id: item.id.clone(),
            bleu4: scores[0],
            rouge1: scores[1],
            rouge2: scores[2],
            rouge_l: scores[3],
            status: item.status,
            matched,
        });
    }

    let n = n_total as f64;
    let relaxed_em_success = if n_success == 0 {
        0.0
    } else {
        n_match as f64 / n_success as f64
    };
    Ok(MetricReport {
        scores: MetricVector {
            bleu4: sums[0] / n,
            rouge1: sums[1] / n,
            rouge2: sums[2] / n,
            rouge_l: sums[3] / n,
            relaxed_em_success,
            relaxed_em_all: n_match as f64 / n,
        },
        n_total,
        n_success,
        n_match,
        n_syntax_fail,
        n_empty,
        n_failed_other,
        per_item,
    })
}

/// Field-wise arithmetic mean and population standard deviation of the six
/// metrics across runs.
pub fn aggregate_runs(reports: &[MetricReport]) -> Result<RunAggregate, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    let n = reports.len() as f64;
    let mut mean = [0.0f64; 6];
    for report in reports {
        for (m, v) in mean.iter_mut().zip(report.scores.as_array()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = [0.0f64; 6];
    for report in reports {
        for ((v, value), m) in var.iter_mut().zip(report.scores.as_array()).zip(mean) {
            *v += (value - m) * (value - m);
        }
    }
    let std = var.map(|v| (v / n).sqrt());
    Ok(RunAggregate {
        mean: MetricVector::from_array(mean),
        std: MetricVector::from_array(std),
        runs: reports.len(),
    })
}
