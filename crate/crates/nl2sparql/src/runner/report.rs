//! Report files: full-precision JSON, per-run CSV in the headline metric
//! column order, the error listing, the manifest, and a rounded
//! human-readable summary.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{PipelineResult, RunConfig, RunnerError};
use crate::metrics::MetricVector;

/// Metric column order used by report.csv and the summary table.
pub const METRIC_COLUMNS: [&str; 6] = [
    "BLEU-4",
    "ROUGE-1",
    "ROUGE-2",
    "ROUGE-L",
    "RelaxedEM(success)",
    "RelaxedEM(all)",
];

#[derive(Serialize)]
struct ReportJson<'a> {
    aggregate: &'a crate::metrics::RunAggregate,
    runs: &'a [crate::metrics::MetricReport],
    breakdown: &'a super::ErrorBreakdown,
}

/// Writes report.json, report.csv, errors.csv, manifest.json, and
/// summary.txt into `dir`; returns the written paths.
pub fn emit_report(
    result: &PipelineResult,
    config: &RunConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, RunnerError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| RunnerError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let io_err = |path: &Path, e: std::io::Error| {
        RunnerError::Runtime(format!("cannot write {}: {e}", path.display()))
    };

    let report_json = dir.join("report.json");
    let body = serde_json::to_vec_pretty(&ReportJson {
        aggregate: &result.aggregate,
        runs: &result.per_run,
        breakdown: &result.breakdown,
    })
    .expect("serialize report");
    std::fs::write(&report_json, body).map_err(|e| io_err(&report_json, e))?;

    let report_csv = dir.join("report.csv");
    write_report_csv(&report_csv, result, config)?;

    let errors_csv = dir.join("errors.csv");
    write_errors_csv(&errors_csv, result)?;

    let manifest_json = dir.join("manifest.json");
    let body = serde_json::to_vec_pretty(&result.manifest).expect("serialize manifest");
    std::fs::write(&manifest_json, body).map_err(|e| io_err(&manifest_json, e))?;

    let summary_txt = dir.join("summary.txt");
    std::fs::write(&summary_txt, render_summary(result, config))
        .map_err(|e| io_err(&summary_txt, e))?;

    Ok(vec![
        report_json,
        report_csv,
        errors_csv,
        manifest_json,
        summary_txt,
    ])
}

fn write_report_csv(
    path: &Path,
    result: &PipelineResult,
    config: &RunConfig,
) -> Result<(), RunnerError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| RunnerError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    let mut header = vec!["strategy", "model", "epoch", "run"];
    header.extend(METRIC_COLUMNS);
    writer
        .write_record(&header)
        .map_err(|e| RunnerError::Runtime(e.to_string()))?;
    let epoch = config.model_epoch.clone().unwrap_or_default();
    let mut write_row = |run: &str, scores: &MetricVector| -> Result<(), RunnerError> {
        let mut row = vec![
            config.strategy.label().to_string(),
            config.generation.model_name.clone(),
            epoch.clone(),
            run.to_string(),
        ];
        row.extend(scores.as_array().iter().map(|v| format!("{v}")));
        writer
            .write_record(&row)
            .map_err(|e| RunnerError::Runtime(e.to_string()))
    };
    for (idx, report) in result.per_run.iter().enumerate() {
        write_row(&format!("{}", idx + 1), &report.scores)?;
    }
    write_row("mean", &result.aggregate.mean)?;
    write_row("std", &result.aggregate.std)?;
    Ok(())
}

fn write_errors_csv(path: &Path, result: &PipelineResult) -> Result<(), RunnerError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| RunnerError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["run", "example_id", "category", "message"])
        .map_err(|e| RunnerError::Runtime(e.to_string()))?;
    for breakdown in &result.breakdown_per_run {
        for item in &breakdown.items {
            writer
                .write_record([
                    item.run.to_string(),
                    item.id.clone(),
                    item.category.name().to_string(),
                    item.message.clone(),
                ])
                .map_err(|e| RunnerError::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}

/// Half-up rounding to two decimals, the precision reports use.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

fn format2(value: f64) -> String {
    format!("{:.2}", round2(value))
}

fn render_summary(result: &PipelineResult, config: &RunConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "strategy: {}  model: {}{}  runs: {}\n",
        config.strategy.label(),
        config.generation.model_name,
        config
            .model_epoch
            .as_ref()
            .map(|e| format!("  epoch: {e}"))
            .unwrap_or_default(),
        result.per_run.len()
    ));
    out.push('\n');

    let width = 20;
    out.push_str(&format!("{:<6}", ""));
    for column in METRIC_COLUMNS {
        out.push_str(&format!("{column:>width$}"));
    }
    out.push('\n');
    let mut row = |label: &str, scores: &MetricVector| {
        out.push_str(&format!("{label:<6}"));
        for value in scores.as_array() {
            out.push_str(&format!("{:>width$}", format2(value)));
        }
        out.push('\n');
    };
    row("mean", &result.aggregate.mean);
    row("std", &result.aggregate.std);

    let last = result.per_run.last().expect("at least one run");
    out.push('\n');
    out.push_str(&format!(
        "items: {}  executed non-empty: {}  matched: {}  syntax failures: {}  empty results: {}  other failures: {}\n",
        last.n_total, last.n_success, last.n_match, last.n_syntax_fail, last.n_empty, last.n_failed_other
    ));
    out.push_str("error categories (final run):\n");
    for (category, count) in &result.breakdown.counts {
        out.push_str(&format!("  {category:<24} {count}\n"));
    }
    out
}

/// Re-renders report.csv and summary.txt from report.json and
/// manifest.json already present in `dir`.
pub fn rerender_from_dir(dir: &Path) -> Result<Vec<PathBuf>, RunnerError> {
    let report_path = dir.join("report.json");
    let raw = std::fs::read_to_string(&report_path).map_err(|e| {
        RunnerError::Config(format!("cannot read {}: {e}", report_path.display()))
    })?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| RunnerError::Runtime(format!("corrupt report.json: {e}")))?;
    let manifest_path = dir.join("manifest.json");
    let manifest_raw = std::fs::read_to_string(&manifest_path).map_err(|e| {
        RunnerError::Config(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_raw)
        .map_err(|e| RunnerError::Runtime(format!("corrupt manifest.json: {e}")))?;

    let strategy = manifest
        .pointer("/strategy")
        .and_then(|v| v.as_str())
        .unwrap_or("?")
        .to_string();
    let model = manifest
        .pointer("/model")
        .and_then(|v| v.as_str())
        .unwrap_or("?")
        .to_string();
    let epoch = manifest
        .pointer("/model_epoch")
        .and_then(|v| v.as_str())
        .unwrap_or("")
        .to_string();

    let vector_at = |v: &serde_json::Value| -> MetricVector {
        MetricVector {
            bleu4: v.pointer("/bleu4").and_then(|x| x.as_f64()).unwrap_or(0.0),
            rouge1: v.pointer("/rouge1").and_then(|x| x.as_f64()).unwrap_or(0.0),
            rouge2: v.pointer("/rouge2").and_then(|x| x.as_f64()).unwrap_or(0.0),
            rouge_l: v.pointer("/rouge_l").and_then(|x| x.as_f64()).unwrap_or(0.0),
            relaxed_em_success: v
                .pointer("/relaxed_em_success")
                .and_then(|x| x.as_f64())
                .unwrap_or(0.0),
            relaxed_em_all: v
                .pointer("/relaxed_em_all")
                .and_then(|x| x.as_f64())
                .unwrap_or(0.0),
        }
    };

    let csv_path = dir.join("report.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .map_err(|e| RunnerError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    let mut header = vec!["strategy", "model", "epoch", "run"];
    header.extend(METRIC_COLUMNS);
    writer
        .write_record(&header)
        .map_err(|e| RunnerError::Runtime(e.to_string()))?;
    let empty = Vec::new();
    let runs = value
        .pointer("/runs")
        .and_then(|v| v.as_array())
        .unwrap_or(&empty);
    let mut write_row = |run: &str, scores: &MetricVector| -> Result<(), RunnerError> {
        let mut row = vec![
            strategy.clone(),
            model.clone(),
            epoch.clone(),
            run.to_string(),
        ];
        row.extend(scores.as_array().iter().map(|v| format!("{v}")));
        writer
            .write_record(&row)
            .map_err(|e| RunnerError::Runtime(e.to_string()))
    };
    for (idx, run) in runs.iter().enumerate() {
        let scores = run.pointer("/scores").unwrap_or(run);
        write_row(&format!("{}", idx + 1), &vector_at(scores))?;
    }
    if let Some(mean) = value.pointer("/aggregate/mean") {
        write_row("mean", &vector_at(mean))?;
    }
    if let Some(std) = value.pointer("/aggregate/std") {
        write_row("std", &vector_at(std))?;
    }
    drop(writer);

    let summary_path = dir.join("summary.txt");
    let mut out = String::new();
    out.push_str(&format!("strategy: {strategy}  model: {model}\n\n"));
    out.push_str(&format!("{:<6}", ""));
    for column in METRIC_COLUMNS {
        out.push_str(&format!("{column:>20}"));
    }
    out.push('\n');
    for (label, pointer) in [("mean", "/aggregate/mean"), ("std", "/aggregate/std")] {
        if let Some(v) = value.pointer(pointer) {
            out.push_str(&format!("{label:<6}"));
            for metric in vector_at(v).as_array() {
                out.push_str(&format!("{:>20}", format2(metric)));
            }
            out.push('\n');
        }
    }
    std::fs::write(&summary_path, out)
        .map_err(|e| RunnerError::Runtime(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok(vec![csv_path, summary_path])
}
