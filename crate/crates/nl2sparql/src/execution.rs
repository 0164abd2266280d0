//! SPARQL-protocol execution and the result normalization feeding relaxed
//! exact match.
//!
//! Queries are POSTed with `Content-Type: application/sparql-query`,
//! asking for SPARQL JSON results (TSV behind an option). Every failure is
//! encoded in the returned [`ExecutionOutcome`], never thrown: invalid
//! generated queries are expected inputs. Responses can be recorded to and
//! replayed from a fixture directory keyed by the query digest, which is
//! what offline runs use.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Tabular SPARQL results: `rows` are aligned with `vars`, unbound cells
/// are empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTable {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Success,
    SyntaxError,
    TransportError,
    Timeout,
}

/// Result of running one query. `table` is present exactly when `status`
/// is `Success`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionOutcome {
    pub status: ExecutionStatus,
    pub table: Option<ResultTable>,
    pub message: String,
    pub elapsed: Duration,
}

impl ExecutionOutcome {
    fn success(table: ResultTable, elapsed: Duration) -> Self {
        Self {
            status: ExecutionStatus::Success,
            table: Some(table),
            message: String::new(),
            elapsed,
        }
    }

    fn failure(status: ExecutionStatus, message: impl Into<String>, elapsed: Duration) -> Self {
        Self {
            status,
            table: None,
            message: message.into(),
            elapsed,
        }
    }
}

/// Deduplicated, header-free set of result lines compared by relaxed EM.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedResultSet {
    pub lines: BTreeSet<String>,
}

/// Serializes each row as tab-joined cells, drops the header, and
/// deduplicates via set insertion.
pub fn normalize_results(table: &ResultTable) -> NormalizedResultSet {
    let lines = table.rows.iter().map(|row| row.join("\t")).collect();
    NormalizedResultSet { lines }
}

/// True iff the query executed successfully and returned zero rows.
pub fn is_empty(outcome: &ExecutionOutcome) -> bool {
    outcome.status == ExecutionStatus::Success
        && outcome.table.as_ref().is_some_and(|t| t.rows.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultsFormat {
    Json,
    Tsv,
}

/// Knobs shared by live and replayed execution.
#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub timeout: Duration,
    pub format: ResultsFormat,
    /// Keep datatype/language decoration on literal cells instead of
    /// reducing them to their lexical form.
    pub strict_literals: bool,
    pub max_response_bytes: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            format: ResultsFormat::Json,
            strict_literals: false,
            max_response_bytes: 10 * 1024 * 1024,
        }
    }
}

/// Stored request/response pair for offline replay.
#[derive(Debug, Serialize, Deserialize)]
struct RecordedResponse {
    query: String,
    status: u16,
    content_type: String,
    body: String,
}

/// SPARQL endpoint client; live HTTP, optionally recording responses, or
/// pure replay from a fixture directory.
pub struct SparqlClient {
    mode: Mode,
    options: ExecOptions,
}

enum Mode {
    Live {
        endpoint: String,
        http: reqwest::blocking::Client,
        record_dir: Option<PathBuf>,
    },
    Replay {
        dir: PathBuf,
    },
}

impl SparqlClient {
    pub fn live(endpoint: &str, options: ExecOptions) -> Self {
        let http = reqwest::blocking::Client::builder()
            .timeout(options.timeout)
            .build()
            .expect("reqwest client");
        Self {
            mode: Mode::Live {
                endpoint: endpoint.to_string(),
                http,
                record_dir: None,
            },
            options,
        }
    }

    /// Live client that also writes every response into `dir` for later
    /// replay.
    pub fn recording(endpoint: &str, options: ExecOptions, dir: &Path) -> Self {
        let mut client = Self::live(endpoint, options);
        if let Mode::Live { record_dir, .. } = &mut client.mode {
            *record_dir = Some(dir.to_path_buf());
        }
        client
    }

    /// Client that answers every query from recorded fixtures; a missing
    /// fixture is a transport error.
    pub fn replay(dir: &Path, options: ExecOptions) -> Self {
        Self {
            mode: Mode::Replay {
                dir: dir.to_path_buf(),
            },
            options,
        }
    }

    pub fn execute(&self, query: &str) -> ExecutionOutcome {
        let start = Instant::now();
        match &self.mode {
            Mode::Live {
                endpoint,
                http,
                record_dir,
            } => {
                let accept = match self.options.format {
                    ResultsFormat::Json => "application/sparql-results+json",
                    ResultsFormat::Tsv => "text/tab-separated-values",
                };
                let response = http
                    .post(endpoint)
                    .header("Content-Type", "application/sparql-query")
                    .header("Accept", accept)
                    .body(query.to_string())
                    .send();
                let response = match response {
                    Ok(r) => r,
                    Err(e) if e.is_timeout() => {
                        return ExecutionOutcome::failure(
                            ExecutionStatus::Timeout,
                            e.to_string(),
                            start.elapsed(),
                        );
                    }
                    Err(e) => {
                        return ExecutionOutcome::failure(
                            ExecutionStatus::TransportError,
                            e.to_string(),
                            start.elapsed(),
                        );
                    }
                };
                let status = response.status().as_u16();
                let content_type = response
                    .headers()
                    .get("content-type")
                    .and_then(|v| v.to_str().ok())
                    .unwrap_or("")
                    .to_string();
                let body = match read_capped(response, self.options.max_response_bytes) {
                    Ok(body) => body,
                    Err(message) => {
                        return ExecutionOutcome::failure(
                            ExecutionStatus::TransportError,
                            message,
                            start.elapsed(),
                        );
                    }
                };
                if let Some(dir) = record_dir {
                    let record = RecordedResponse {
                        query: query.to_string(),
                        status,
                        content_type: content_type.clone(),
                        body: body.clone(),
                    };
                    if let Err(e) = write_recording(dir, query, &record) {
                        return ExecutionOutcome::failure(
                            ExecutionStatus::TransportError,
                            format!("failed to record response: {e}"),
                            start.elapsed(),
                        );
                    }
                }
                self.decode(status, &body, start.elapsed())
            }
            Mode::Replay { dir } => {
                let path = recording_path(dir, query);
                let raw = match std::fs::read_to_string(&path) {
                    Ok(raw) => raw,
                    Err(_) => {
                        return ExecutionOutcome::failure(
                            ExecutionStatus::TransportError,
                            format!(
                                "no recorded response for query digest {} (expected {})",
                                query_digest(query),
                                path.display()
                            ),
                            start.elapsed(),
                        );
                    }
                };
                match serde_json::from_str::<RecordedResponse>(&raw) {
                    Ok(record) => self.decode(record.status, &record.body, start.elapsed()),
                    Err(e) => ExecutionOutcome::failure(
                        ExecutionStatus::TransportError,
                        format!("corrupt recording {}: {e}", path.display()),
                        start.elapsed(),
                    ),
                }
            }
        }
    }

    fn decode(&self, status: u16, body: &str, elapsed: Duration) -> ExecutionOutcome {
        match status {
            200..=299 => {
                let parsed = match self.options.format {
                    ResultsFormat::Json => parse_json_results(body, self.options.strict_literals),
                    ResultsFormat::Tsv => parse_tsv_results(body, self.options.strict_literals),
                };
                match parsed {
                    Ok(table) => ExecutionOutcome::success(table, elapsed),
                    Err(message) => {
                        ExecutionOutcome::failure(ExecutionStatus::TransportError, message, elapsed)
                    }
                }
            }
            // Query-level rejections carry the engine's message verbatim.
            400..=499 => {
                ExecutionOutcome::failure(ExecutionStatus::SyntaxError, body.to_string(), elapsed)
            }
            _ => ExecutionOutcome::failure(
                ExecutionStatus::TransportError,
                format!("HTTP {status}: {}", truncate(body, 500)),
                elapsed,
            ),
        }
    }
}

/// One-call form for the common case: live endpoint, JSON results.
pub fn execute(query: &str, endpoint: &str, timeout: Duration) -> ExecutionOutcome {
    let options = ExecOptions {
        timeout,
        ..ExecOptions::default()
    };
    SparqlClient::live(endpoint, options).execute(query)
}

pub fn query_digest(query: &str) -> String {
    hex::encode(Sha256::digest(query.as_bytes()))
}

fn recording_path(dir: &Path, query: &str) -> PathBuf {
    let digest = query_digest(query);
    dir.join(&digest[..2]).join(format!("{digest}.json"))
}

fn write_recording(dir: &Path, query: &str, record: &RecordedResponse) -> std::io::Result<()> {
    let path = recording_path(dir, query);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(record).expect("serialize recording"))?;
    std::fs::rename(&tmp, &path)
}

/// Writes a replayable fixture directly, used to stage offline fixtures.
pub fn record_response(
    dir: &Path,
    query: &str,
    status: u16,
    content_type: &str,
    body: &str,
) -> std::io::Result<()> {
    write_recording(
        dir,
        query,
        &RecordedResponse {
            query: query.to_string(),
            status,
            content_type: content_type.to_string(),
            body: body.to_string(),
        },
    )
}

fn read_capped(response: reqwest::blocking::Response, cap: usize) -> Result<String, String> {
    if let Some(len) = response.content_length() {
        if len > cap as u64 {
            return Err(format!("response size {len} exceeds cap of {cap} bytes"));
        }
    }
    let mut buf = Vec::new();
    let mut limited = response.take(cap as u64 + 1);
    limited
        .read_to_end(&mut buf)
        .map_err(|e| format!("failed to read response body: {e}"))?;
    if buf.len() > cap {
        return Err(format!("response body exceeds cap of {cap} bytes"));
    }
    String::from_utf8(buf).map_err(|e| format!("response body is not UTF-8: {e}"))
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

fn parse_json_results(body: &str, strict: bool) -> Result<ResultTable, String> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format!("invalid results JSON: {e}"))?;
    let vars: Vec<String> = value
        .pointer("/head/vars")
        .and_then(|v| v.as_array())
        .ok_or("results JSON missing head.vars")?
        .iter()
        .map(|v| v.as_str().unwrap_or_default().to_string())
        .collect();
    let bindings = value
        .pointer("/results/bindings")
        .and_then(|v| v.as_array())
        .ok_or("results JSON missing results.bindings")?;
    let mut rows = Vec::with_capacity(bindings.len());
    for binding in bindings {
        let mut row = Vec::with_capacity(vars.len());
        for var in &vars {
            let cell = match binding.get(var) {
                Some(term) => render_json_term(term, strict),
                None => String::new(),
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(ResultTable { vars, rows })
}

fn render_json_term(term: &serde_json::Value, strict: bool) -> String {
    let value = term.get("value").and_then(|v| v.as_str()).unwrap_or("");
    if !strict {
        return value.to_string();
    }
    match term.get("type").and_then(|v| v.as_str()) {
        Some("uri") => format!("<{value}>"),
        Some("bnode") => format!("_:{value}"),
        _ => {
            if let Some(lang) = term.get("xml:lang").and_then(|v| v.as_str()) {
                format!("\"{value}\"@{lang}")
            } else if let Some(dt) = term.get("datatype").and_then(|v| v.as_str()) {
                format!("\"{value}\"^^<{dt}>")
            } else {
                format!("\"{value}\"")
            }
        }
    }
}

fn parse_tsv_results(body: &str, strict: bool) -> Result<ResultTable, String> {
    let mut lines = body.lines();
    let header = lines.next().ok_or("empty TSV results")?;
    let vars: Vec<String> = header
        .split('\t')
        .map(|v| v.trim_start_matches('?').to_string())
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut row: Vec<String> = line
            .split('\t')
            .map(|cell| {
                if strict {
                    cell.to_string()
                } else {
                    lexical_form(cell)
                }
            })
            .collect();
        row.resize(vars.len(), String::new());
        rows.push(row);
    }
    Ok(ResultTable { vars, rows })
}

/// Reduces a TSV term serialization to its lexical form: strips IRI angle
/// brackets, quotes, and any datatype or language decoration.
fn lexical_form(cell: &str) -> String {
    let cell = cell.trim();
    if let Some(inner) = cell.strip_prefix('<').and_then(|c| c.strip_suffix('>')) {
        return inner.to_string();
    }
    if cell.starts_with('"') {
        // "lex", "lex"@lang, or "lex"^^<datatype>
        if let Some(end) = closing_quote(cell) {
            let inner = &cell[1..end];
            return unescape_tsv(inner);
        }
    }
    cell.to_string()
}

fn closing_quote(cell: &str) -> Option<usize> {
    let bytes = cell.as_bytes();
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

fn unescape_tsv(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(vars: &[&str], rows: &[&[&str]]) -> ResultTable {
        ResultTable {
            vars: vars.iter().map(|v| v.to_string()).collect(),
            rows: rows
                .iter()
                .map(|r| r.iter().map(|c| c.to_string()).collect())
                .collect(),
        }
    }

    #[test]
    fn normalize_dedupes_rows() {
        let t = table(&["a", "b"], &[&["1", "2"], &["1", "2"]]);
        let set = normalize_results(&t);
        assert_eq!(set.lines.len(), 1);
        assert!(set.lines.contains("1\t2"));
    }

    #[test]
    fn normalize_ignores_header_names() {
        let t1 = table(&["a", "b"], &[&["1", "2"]]);
        let t2 = table(&["x", "y"], &[&["1", "2"]]);
        assert_eq!(normalize_results(&t1), normalize_results(&t2));
    }

    #[test]
    fn normalize_is_order_invariant() {
        let t1 = table(&["a"], &[&["1"], &["3"]]);
        let t2 = table(&["a"], &[&["3"], &["1"]]);
        assert_eq!(normalize_results(&t1), normalize_results(&t2));
    }

    #[test]
    fn is_empty_cases() {
        let empty = ExecutionOutcome::success(table(&["a"], &[]), Duration::ZERO);
        assert!(is_empty(&empty));
        let full = ExecutionOutcome::success(table(&["a"], &[&["1"]]), Duration::ZERO);
        assert!(!is_empty(&full));
        let failed = ExecutionOutcome::failure(ExecutionStatus::SyntaxError, "bad", Duration::ZERO);
        assert!(!is_empty(&failed));
    }

    #[test]
    fn json_results_decode_with_unbound_cells() {
        let body = r#"{
            "head": {"vars": ["s", "o"]},
            "results": {"bindings": [
                {"s": {"type": "uri", "value": "http://x/a"},
                 "o": {"type": "literal", "value": "42", "datatype": "http://www.w3.org/2001/XMLSchema#integer"}},
                {"s": {"type": "uri", "value": "http://x/b"}}
            ]}
        }"#;
        let t = parse_json_results(body, false).unwrap();
        assert_eq!(t.vars, vec!["s", "o"]);
        assert_eq!(t.rows[0], vec!["http://x/a", "42"]);
        assert_eq!(t.rows[1], vec!["http://x/b", ""]);
    }

    #[test]
    fn json_results_strict_keeps_decoration() {
        let body = r#"{
            "head": {"vars": ["o"]},
            "results": {"bindings": [
                {"o": {"type": "literal", "value": "42", "datatype": "http://www.w3.org/2001/XMLSchema#integer"}}
            ]}
        }"#;
        let t = parse_json_results(body, true).unwrap();
        assert_eq!(
            t.rows[0][0],
            "\"42\"^^<http://www.w3.org/2001/XMLSchema#integer>"
        );
    }

    #[test]
    fn tsv_results_decode() {
        let body = "?s\t?n\n<http://x/a>\t\"42\"^^<http://www.w3.org/2001/XMLSchema#int>\n<http://x/b>\t\"hi there\"@en\n";
        let t = parse_tsv_results(body, false).unwrap();
        assert_eq!(t.vars, vec!["s", "n"]);
        assert_eq!(t.rows[0], vec!["http://x/a", "42"]);
        assert_eq!(t.rows[1], vec!["http://x/b", "hi there"]);
    }

    #[test]
    fn malformed_results_json_is_a_transport_error() {
        assert!(parse_json_results("{}", false).is_err());
        assert!(parse_json_results("not json", false).is_err());
    }

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"head":{"vars":["s"]},"results":{"bindings":[{"s":{"type":"uri","value":"http://x/a"}}]}}"#;
        let query = "SELECT ?s WHERE { ?s ?p ?o }";
        record_response(
            dir.path(),
            query,
            200,
            "application/sparql-results+json",
            body,
        )
        .unwrap();
        let client = SparqlClient::replay(dir.path(), ExecOptions::default());
        let outcome = client.execute(query);
        assert_eq!(outcome.status, ExecutionStatus::Success);
        assert_eq!(outcome.table.unwrap().rows.len(), 1);
        // Unrecorded queries are transport errors, not panics.
        let missing = client.execute("SELECT ?x WHERE { ?x ?y ?z }");
        assert_eq!(missing.status, ExecutionStatus::TransportError);
    }

    #[test]
    fn replayed_4xx_is_a_syntax_error_with_verbatim_message() {
        let dir = tempfile::tempdir().unwrap();
        let message = "Invalid SPARQL query: Variable ?metric is selected but not aggregated.";
        record_response(dir.path(), "bad query", 400, "text/plain", message).unwrap();
        let outcome = SparqlClient::replay(dir.path(), ExecOptions::default()).execute("bad query");
        assert_eq!(outcome.status, ExecutionStatus::SyntaxError);
        assert_eq!(outcome.message, message);
    }

    #[test]
    fn fixture_paths_shard_on_first_two_hex_chars() {
        let digest = query_digest("q");
        let path = recording_path(Path::new("/tmp/fix"), "q");
        assert!(path
            .to_string_lossy()
            .contains(&format!("{}/{digest}.json", &digest[..2])));
    }
}
