//! Turns raw LLM output into an executable query and classifies failures.
//!
//! Extraction finds the query inside prose or code fences; cleaning
//! applies a fixed sequence of deterministic textual repairs (worst case
//! the identity); one optional LLM correction round fires only when the
//! cleaned query still fails to parse or validate. Classification buckets
//! each evaluated item into exactly one error category, separating shape
//! mismatches from wrong-constant mismatches via triple-pattern
//! isomorphism.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::execution::{ExecutionOutcome, ExecutionStatus};
use crate::llm::{LlmError, TextGenerator};
use crate::prompting::normalize_template;
use crate::sparql::{
    extract_triple_patterns, parse, validate_aggregation, Diagnostic, DiagnosticCode, IriRef,
    SelectQuery, Term,
};

const CORRECT_TEMPLATE: &str = include_str!("../templates/correct.txt");

const RDF_TYPE_IRI: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Error)]
pub enum PostprocessError {
    #[error("no SPARQL query found in the output")]
    NoQueryFound,
    #[error("llm_correct requires at least one diagnostic")]
    NoDiagnostics,
    #[error("classification bundle incomplete: {0}")]
    IncompleteBundle(String),
    #[error(transparent)]
    Client(#[from] LlmError),
}

/// Pulls the query text out of raw model output: the first fenced code
/// block wins; otherwise the span from the first PREFIX/SELECT keyword
/// through the last `}` plus any trailing LIMIT/OFFSET clause.
pub fn extract_query(raw: &str) -> Result<String, PostprocessError> {
    let lowered = raw.to_lowercase();
    if !lowered.contains("select") && !lowered.contains("prefix") {
        return Err(PostprocessError::NoQueryFound);
    }
    if let Some(block) = first_fenced_block(raw) {
        return Ok(block.trim().to_string());
    }
    let start = keyword_position(raw, "PREFIX")
        .into_iter()
        .chain(keyword_position(raw, "SELECT"))
        .min()
        .ok_or(PostprocessError::NoQueryFound)?;
    let body = &raw[start..];
    match body.rfind('}') {
        Some(brace) => {
            let mut end = brace + 1;
            end += modifier_tail_len(&body[end..]);
            Ok(body[..end].trim().to_string())
        }
        None => Ok(body.trim().to_string()),
    }
}

fn first_fenced_block(raw: &str) -> Option<&str> {
    let open = raw.find("```")?;
    let after = &raw[open + 3..];
    let close = after.find("```")?;
    let mut content = &after[..close];
    // Drop a language tag on the opening fence line.
    if let Some(newline) = content.find('\n') {
        let first_line = &content[..newline];
        if !first_line.trim().is_empty() && !first_line.contains(' ') {
            content = &content[newline + 1..];
        }
    }
    Some(content)
}

/// Byte offset of the first case-insensitive standalone occurrence.
fn keyword_position(raw: &str, keyword: &str) -> Option<usize> {
    let lowered = raw.to_lowercase();
    let needle = keyword.to_lowercase();
    let mut from = 0;
    while let Some(rel) = lowered[from..].find(&needle) {
        let at = from + rel;
        let before_ok = at == 0
            || !lowered[..at]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_alphanumeric());
        let after = at + needle.len();
        let after_ok = after >= lowered.len()
            || !lowered[after..]
                .chars()
                .next()
                .is_some_and(|c| c.is_alphanumeric());
        if before_ok && after_ok {
            return Some(at);
        }
        from = at + needle.len();
    }
    None
}

/// Length of a leading run of LIMIT/OFFSET clauses (with values).
fn modifier_tail_len(tail: &str) -> usize {
    let mut consumed = 0;
    loop {
        let rest = &tail[consumed..];
        let trimmed = rest.trim_start();
        let ws = rest.len() - trimmed.len();
        let lowered = trimmed.to_lowercase();
        let keyword_len = if lowered.starts_with("limit") {
            5
        } else if lowered.starts_with("offset") {
            6
        } else {
            return consumed;
        };
        let after_kw = &trimmed[keyword_len..];
        let after_ws = after_kw.trim_start();
        let digits = after_ws.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            return consumed;
        }
        consumed += ws + keyword_len + (after_kw.len() - after_ws.len()) + digits;
    }
}

/// Record of one cleaning pass: which rules changed the text, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: String,
    pub output: String,
    pub rules_applied: Vec<String>,
    pub changed: bool,
}

/// Applies the deterministic cleaning rules in fixed order:
/// r1 normalize line endings, r2 strip wrapping quotes/backticks,
/// r3 split glued variables, r4 space braces glued to words,
/// r5 drop trailing punctuation after the query end, r6 collapse blank
/// line runs. Idempotent.
type CleaningRule = fn(&str) -> String;

pub fn clean(query: &str) -> CleaningReport {
    let mut text = query.to_string();
    let mut rules_applied = Vec::new();
    let rules: [(&str, CleaningRule); 6] = [
        ("r1", rule_normalize_newlines),
        ("r2", rule_strip_wrappers),
        ("r3", rule_split_glued_variables),
        ("r4", rule_space_braces),
        ("r5", rule_drop_trailing_punct),
        ("r6", rule_collapse_blank_lines),
    ];
    for (id, rule) in rules {
        let next = rule(&text);
        if next != text {
            rules_applied.push(id.to_string());
            text = next;
        }
    }
    let changed = text != query;
    CleaningReport {
        input: query.to_string(),
        output: text,
        rules_applied,
        changed,
    }
}

fn rule_normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

fn rule_strip_wrappers(text: &str) -> String {
    let mut current = text.trim().to_string();
    let mut stripped_any = false;
    loop {
        let mut next: Option<String> = None;
        if current.len() >= 6 && current.starts_with("```") && current.ends_with("```") {
            let mut inner = &current[3..current.len() - 3];
            if let Some(newline) = inner.find('\n') {
                let first_line = &inner[..newline];
                if !first_line.trim().is_empty() && !first_line.contains(' ') {
                    inner = &inner[newline + 1..];
                }
            }
            next = Some(inner.trim().to_string());
        } else {
            for quote in ['`', '"', '\''] {
                if current.len() >= 2 && current.starts_with(quote) && current.ends_with(quote) {
                    next = Some(current[1..current.len() - 1].trim().to_string());
                    break;
                }
            }
        }
        match next {
            Some(inner) if inner != current => {
                current = inner;
                stripped_any = true;
            }
            _ => break,
        }
    }
    if stripped_any {
        current
    } else {
        text.to_string()
    }
}

/// Per-char flags marking string-literal and IRI spans the textual rules
/// must not touch.
fn protected_mask(chars: &[char]) -> Vec<bool> {
    let mut mask = vec![false; chars.len()];
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '<' => {
                // A '<' only starts an IRI if a '>' closes it without
                // whitespace in between.
                let mut j = i + 1;
                while j < chars.len() && !chars[j].is_whitespace() && chars[j] != '>' {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '>' {
                    for flag in mask.iter_mut().take(j + 1).skip(i) {
                        *flag = true;
                    }
                    i = j + 1;
                    continue;
                }
                i += 1;
            }
            quote @ ('"' | '\'') => {
                let mut j = i + 1;
                while j < chars.len() {
                    if chars[j] == '\\' {
                        j += 2;
                        continue;
                    }
                    if chars[j] == quote || chars[j] == '\n' {
                        break;
                    }
                    j += 1;
                }
                let end = j.min(chars.len().saturating_sub(1));
                for flag in mask.iter_mut().take(end + 1).skip(i) {
                    *flag = true;
                }
                i = end + 1;
            }
            _ => i += 1,
        }
    }
    mask
}

fn rule_split_glued_variables(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mask = protected_mask(&chars);
    let mut out = String::with_capacity(text.len());
    let mut in_variable = false;
    for (i, &c) in chars.iter().enumerate() {
        if mask[i] {
            in_variable = false;
            out.push(c);
            continue;
        }
        if (c == '?' || c == '$') && in_variable {
            out.push(' ');
        }
        if c == '?' || c == '$' {
            in_variable = true;
        } else if !(c.is_ascii_alphanumeric() || c == '_') {
            in_variable = false;
        }
        out.push(c);
    }
    out
}

fn rule_space_braces(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mask = protected_mask(&chars);
    let mut out = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        if !mask[i] {
            let prev = if i > 0 { Some(chars[i - 1]) } else { None };
            let word_before = prev.is_some_and(|p| p.is_ascii_alphanumeric() || p == '_');
            if c == '{' && word_before && !mask[i - 1] {
                out.push(' ');
            }
            if (c.is_ascii_alphanumeric() || c == '_' || c == '?' || c == '$')
                && prev == Some('}')
                && !mask[i - 1]
            {
                out.push(' ');
            }
        }
        out.push(c);
    }
    out
}

fn rule_drop_trailing_punct(text: &str) -> String {
    let trimmed = text.trim_end();
    let mut stripped = trimmed;
    while matches!(stripped.chars().next_back(), Some(';') | Some('.')) {
        stripped = stripped[..stripped.len() - 1].trim_end();
    }
    if stripped.len() == trimmed.len() || !ends_at_query_boundary(stripped) {
        text.to_string()
    } else {
        stripped.to_string()
    }
}

/// True when everything after the last '}' is only LIMIT/OFFSET clauses.
fn ends_at_query_boundary(text: &str) -> bool {
    let Some(pos) = text.rfind('}') else {
        return false;
    };
    let tail = &text[pos + 1..];
    let tokens: Vec<&str> = tail.split_whitespace().collect();
    let mut i = 0;
    while i < tokens.len() {
        let word = tokens[i].to_ascii_uppercase();
        if (word == "LIMIT" || word == "OFFSET")
            && i + 1 < tokens.len()
            && tokens[i + 1].chars().all(|c| c.is_ascii_digit())
            && !tokens[i + 1].is_empty()
        {
            i += 2;
        } else {
            return false;
        }
    }
    true
}

fn rule_collapse_blank_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut newline_run = 0;
    for c in text.chars() {
        if c == '\n' {
            newline_run += 1;
            if newline_run <= 2 {
                out.push(c);
            }
        } else {
            newline_run = 0;
            out.push(c);
        }
    }
    out
}

/// Outcome of the single correction round.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    /// The corrected query when correction produced a valid one, else the
    /// original input query.
    pub query: String,
    pub corrected: bool,
    /// What the correction endpoint returned, kept for the error log.
    pub raw_response: String,
}

/// One LLM correction round: prompt with the query and its diagnostics,
/// re-extract and re-clean the answer, and keep the original query when
/// the answer still does not parse and validate. Never loops.
pub fn llm_correct(
    query: &str,
    diagnostics: &[Diagnostic],
    client: &dyn TextGenerator,
) -> Result<CorrectionOutcome, PostprocessError> {
    if diagnostics.is_empty() {
        return Err(PostprocessError::NoDiagnostics);
    }
    let problems = diagnostics
        .iter()
        .map(|d| format!("- {d}"))
        .collect::<Vec<_>>()
        .join("\n");
    let user_text = normalize_template(CORRECT_TEMPLATE)
        .replace("{query}", query)
        .replace("{diagnostics}", &problems);
    let raw_response = client.complete("", &user_text)?;

    let keep_original = |raw: String| CorrectionOutcome {
        query: query.to_string(),
        corrected: false,
        raw_response: raw,
    };
    let Ok(extracted) = extract_query(&raw_response) else {
        return Ok(keep_original(raw_response));
    };
    let cleaned = clean(&extracted).output;
    match parse(&cleaned) {
        Ok(ast) if validate_aggregation(&ast).is_empty() => Ok(CorrectionOutcome {
            query: cleaned,
            corrected: true,
            raw_response,
        }),
        _ => Ok(keep_original(raw_response)),
    }
}

/// Exactly one category per evaluated item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Correct,
    SyntaxAggregation,
    SyntaxSubquery,
    SyntaxOther,
    EmptyResult,
    SemanticInaccuracy,
    StructuralInconsistency,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 7] = [
        ErrorCategory::Correct,
        ErrorCategory::SyntaxAggregation,
        ErrorCategory::SyntaxSubquery,
        ErrorCategory::SyntaxOther,
        ErrorCategory::EmptyResult,
        ErrorCategory::SemanticInaccuracy,
        ErrorCategory::StructuralInconsistency,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ErrorCategory::Correct => "Correct",
            ErrorCategory::SyntaxAggregation => "SyntaxAggregation",
            ErrorCategory::SyntaxSubquery => "SyntaxSubquery",
            ErrorCategory::SyntaxOther => "SyntaxOther",
            ErrorCategory::EmptyResult => "EmptyResult",
            ErrorCategory::SemanticInaccuracy => "SemanticInaccuracy",
            ErrorCategory::StructuralInconsistency => "StructuralInconsistency",
        }
    }
}

/// Everything classification needs about one evaluated item.
#[derive(Debug, Clone, Default)]
pub struct EvaluationBundle<'a> {
    /// Parse plus validation diagnostics for the final generated query.
    pub diagnostics: &'a [Diagnostic],
    pub gen_ast: Option<&'a SelectQuery>,
    pub outcome: Option<&'a ExecutionOutcome>,
    /// Relaxed-EM match flag; required when the execution returned rows.
    pub matched: Option<bool>,
}

/// Decision ladder over the bundle: aggregation failures, then malformed
/// subqueries, then other syntax failures (including endpoint rejections
/// and transport losses), then empty results, then match, and finally the
/// semantic/structural split via [`structural_diff`].
pub fn classify(
    bundle: &EvaluationBundle<'_>,
    gold_ast: Option<&SelectQuery>,
) -> Result<ErrorCategory, PostprocessError> {
    if bundle
        .diagnostics
        .iter()
        .any(|d| d.code == DiagnosticCode::AggregationUngroupedVar)
    {
        return Ok(ErrorCategory::SyntaxAggregation);
    }
    if bundle
        .diagnostics
        .iter()
        .any(|d| d.code == DiagnosticCode::MalformedSubquery)
    {
        return Ok(ErrorCategory::SyntaxSubquery);
    }
    if !bundle.diagnostics.is_empty() {
        return Ok(ErrorCategory::SyntaxOther);
    }
    let outcome = bundle.outcome.ok_or_else(|| {
        PostprocessError::IncompleteBundle("parsed query without an execution outcome".into())
    })?;
    match outcome.status {
        ExecutionStatus::SyntaxError => return Ok(ErrorCategory::SyntaxOther),
        // Transport losses are not query properties; they land in the
        // catch-all failure bucket with the message preserved.
        ExecutionStatus::TransportError | ExecutionStatus::Timeout => {
            return Ok(ErrorCategory::SyntaxOther)
        }
        ExecutionStatus::Success => {}
    }
    let table = outcome.table.as_ref().ok_or_else(|| {
        PostprocessError::IncompleteBundle("success outcome without a table".into())
    })?;
    if table.rows.is_empty() {
        return Ok(ErrorCategory::EmptyResult);
    }
    let matched = bundle.matched.ok_or_else(|| {
        PostprocessError::IncompleteBundle("non-empty execution without a match flag".into())
    })?;
    if matched {
        return Ok(ErrorCategory::Correct);
    }
    match (bundle.gen_ast, gold_ast) {
        (Some(gen), Some(gold)) => {
            if structural_diff(gen, gold).isomorphic {
                Ok(ErrorCategory::SemanticInaccuracy)
            } else {
                Ok(ErrorCategory::StructuralInconsistency)
            }
        }
        // Without both shapes the split is undecidable; the conservative
        // bucket is the structural one.
        _ => Ok(ErrorCategory::StructuralInconsistency),
    }
}

/// Shape comparison of two queries' triple patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralDiff {
    pub isomorphic: bool,
    /// Generated triple count minus gold triple count.
    pub triple_count_delta: i64,
    /// Constants at positionally matched slots that differ under the
    /// found variable mapping: (gold term, gen term).
    pub differing_constants: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Var(String),
    /// Constant term: (resolved comparison form, display form).
    Const(String, String),
}

fn term_slot(term: &Term, query: &SelectQuery) -> Slot {
    match term {
        Term::Variable(name) => Slot::Var(name.clone()),
        Term::RdfType => Slot::Const(format!("<{RDF_TYPE_IRI}>"), "a".to_string()),
        Term::Iri(IriRef::Full(iri)) => Slot::Const(format!("<{iri}>"), format!("<{iri}>")),
        Term::Iri(IriRef::Prefixed { prefix, local }) => {
            let display = format!("{prefix}:{local}");
            match query.resolve_prefix(prefix) {
                Some(base) => Slot::Const(format!("<{base}{local}>"), display),
                None => Slot::Const(display.clone(), display),
            }
        }
        Term::Literal(lit) => {
            let display = display_literal(lit);
            Slot::Const(display.clone(), display)
        }
    }
}

fn display_literal(lit: &crate::sparql::Literal) -> String {
    use crate::sparql::Literal;
    match lit {
        Literal::Numeric(lexical) => lexical.clone(),
        Literal::Boolean(b) => b.to_string(),
        Literal::String {
            value,
            language,
            datatype,
        } => {
            let quoted = format!("\"{value}\"");
            match (language, datatype) {
                (Some(lang), _) => format!("{quoted}@{lang}"),
                (None, Some(IriRef::Full(iri))) => format!("{quoted}^^<{iri}>"),
                (None, Some(IriRef::Prefixed { prefix, local })) => {
                    format!("{quoted}^^{prefix}:{local}")
                }
                (None, None) => quoted,
            }
        }
    }
}

type SlotTriple = [Slot; 3];

fn slot_triples(query: &SelectQuery) -> Vec<SlotTriple> {
    extract_triple_patterns(query)
        .into_iter()
        .map(|scoped| {
            [
                term_slot(&scoped.triple.subject, query),
                term_slot(&scoped.triple.predicate, query),
                term_slot(&scoped.triple.object, query),
            ]
        })
        .collect()
}

fn class_signature(triple: &SlotTriple) -> [bool; 3] {
    [
        matches!(triple[0], Slot::Var(_)),
        matches!(triple[1], Slot::Var(_)),
        matches!(triple[2], Slot::Var(_)),
    ]
}

/// Exact backtracking search limit; larger patterns fall back to a
/// degree-sequence comparison.
const EXACT_SEARCH_LIMIT: usize = 12;

/// Compares the triple-pattern multigraphs of the generated and gold
/// queries under variable renaming, with constants matched only by
/// position class. Exact (backtracking) up to 12 triples per side.
pub fn structural_diff(gen: &SelectQuery, gold: &SelectQuery) -> StructuralDiff {
    let gen_triples = slot_triples(gen);
    let gold_triples = slot_triples(gold);
    let delta = gen_triples.len() as i64 - gold_triples.len() as i64;
    if gen_triples.len() != gold_triples.len() {
        return StructuralDiff {
            isomorphic: false,
            triple_count_delta: delta,
            differing_constants: Vec::new(),
        };
    }
    if gen_triples.len() > EXACT_SEARCH_LIMIT {
        return StructuralDiff {
            isomorphic: degree_sequences_match(&gen_triples, &gold_triples),
            triple_count_delta: 0,
            differing_constants: Vec::new(),
        };
    }

    let mut state = MatchState {
        gold: &gold_triples,
        gen: &gen_triples,
        used: vec![false; gen_triples.len()],
        gold_to_gen: HashMap::new(),
        gen_to_gold: HashMap::new(),
        assignment: vec![usize::MAX; gold_triples.len()],
    };
    if !state.search(0) {
        return StructuralDiff {
            isomorphic: false,
            triple_count_delta: 0,
            differing_constants: Vec::new(),
        };
    }
    let mut differing = Vec::new();
    for (gold_idx, &gen_idx) in state.assignment.iter().enumerate() {
        for pos in 0..3 {
            if let (Slot::Const(gold_cmp, gold_disp), Slot::Const(gen_cmp, gen_disp)) =
                (&gold_triples[gold_idx][pos], &gen_triples[gen_idx][pos])
            {
                if gold_cmp != gen_cmp {
                    differing.push((gold_disp.clone(), gen_disp.clone()));
                }
            }
        }
    }
    StructuralDiff {
        isomorphic: true,
        triple_count_delta: 0,
        differing_constants: differing,
    }
}

struct MatchState<'a> {
    gold: &'a [SlotTriple],
    gen: &'a [SlotTriple],
    used: Vec<bool>,
    gold_to_gen: HashMap<String, String>,
    gen_to_gold: HashMap<String, String>,
    assignment: Vec<usize>,
}

impl MatchState<'_> {
    fn search(&mut self, gold_idx: usize) -> bool {
        if gold_idx == self.gold.len() {
            return true;
        }
        // Try candidates with the fewest constant mismatches first so the
        // reported diff stays minimal when several matchings exist.
        let mut candidates: Vec<(usize, usize)> = (0..self.gen.len())
            .filter(|&i| !self.used[i])
            .filter(|&i| class_signature(&self.gen[i]) == class_signature(&self.gold[gold_idx]))
            .map(|i| (constant_mismatches(&self.gold[gold_idx], &self.gen[i]), i))
            .collect();
        candidates.sort();
        for (_, gen_idx) in candidates {
            if let Some(bound) = self.try_bind(gold_idx, gen_idx) {
                self.used[gen_idx] = true;
                self.assignment[gold_idx] = gen_idx;
                if self.search(gold_idx + 1) {
                    return true;
                }
                self.assignment[gold_idx] = usize::MAX;
                self.used[gen_idx] = false;
                self.unbind(bound);
            }
        }
        false
    }

    /// Extends the variable bijection for one triple pair; returns the
    /// newly added gold-variable bindings for undo, or None on conflict.
    fn try_bind(&mut self, gold_idx: usize, gen_idx: usize) -> Option<Vec<String>> {
        let mut added = Vec::new();
        for pos in 0..3 {
            if let (Slot::Var(gold_var), Slot::Var(gen_var)) =
                (&self.gold[gold_idx][pos], &self.gen[gen_idx][pos])
            {
                match self.gold_to_gen.get(gold_var) {
                    Some(existing) if existing == gen_var => continue,
                    Some(_) => {
                        self.unbind(added);
                        return None;
                    }
                    None => {
                        if self.gen_to_gold.contains_key(gen_var) {
                            self.unbind(added);
                            return None;
                        }
                        self.gold_to_gen
                            .insert(gold_var.clone(), gen_var.clone());
                        self.gen_to_gold
                            .insert(gen_var.clone(), gold_var.clone());
                        added.push(gold_var.clone());
                    }
                }
            }
        }
        Some(added)
    }

    fn unbind(&mut self, added: Vec<String>) {
        for gold_var in added {
            if let Some(gen_var) = self.gold_to_gen.remove(&gold_var) {
                self.gen_to_gold.remove(&gen_var);
            }
        }
    }
}

fn constant_mismatches(a: &SlotTriple, b: &SlotTriple) -> usize {
    (0..3)
        .filter(|&pos| {
            matches!(
                (&a[pos], &b[pos]),
                (Slot::Const(x, _), Slot::Const(y, _)) if x != y
            )
        })
        .count()
}

/// Approximate comparison for large patterns: per-variable position
/// profiles and triple class signatures must agree as multisets.
fn degree_sequences_match(a: &[SlotTriple], b: &[SlotTriple]) -> bool {
    fn profiles(triples: &[SlotTriple]) -> (Vec<[usize; 3]>, Vec<[bool; 3]>) {
        let mut by_var: HashMap<&str, [usize; 3]> = HashMap::new();
        for triple in triples {
            for (pos, slot) in triple.iter().enumerate() {
                if let Slot::Var(name) = slot {
                    by_var.entry(name).or_default()[pos] += 1;
                }
            }
        }
        let mut var_profiles: Vec<[usize; 3]> = by_var.into_values().collect();
        var_profiles.sort();
        let mut signatures: Vec<[bool; 3]> = triples.iter().map(class_signature).collect();
        signatures.sort();
        (var_profiles, signatures)
    }
    profiles(a) == profiles(b)
}
