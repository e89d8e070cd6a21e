//! Report emission (CSV or JSON lines) and the matching readers.
//!
//! Both formats interleave two record kinds, `query` then `aggregate`. CSV
//! uses one header covering both kinds; cells that do not apply to a record
//! are empty. Reals are written with 4 decimal places.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::Algorithm;

use super::config::{OutputFormat, Pooling};
use super::experiment::{agg_key, aggregate_rows, AggregateRow, ExperimentReport, QueryRow};
use super::HarnessError;

/// CSV column order.
pub const CSV_COLUMNS: [&str; 29] = [
    "record",
    "dataset",
    "pooling",
    "query_id",
    "label",
    "algorithm",
    "k",
    "batch_size",
    "pivot",
    "cached",
    "partial",
    "n",
    "comparisons",
    "inference_calls",
    "cache_hits",
    "batch_groups",
    "ndcg",
    "error",
    "queries",
    "failures",
    "comparisons_mean",
    "comparisons_sd",
    "inference_calls_mean",
    "inference_calls_sd",
    "cache_hits_mean",
    "ndcg_mean",
    "gain_vs_heapsort",
    "gain_vs_uncached",
    "config",
];

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Query(QueryRow),
    Aggregate(AggregateRow),
}

fn real(x: f64) -> String {
    let s = format!("{x:.4}");
    // keep "-0.0000" out of the output
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn config_string(a: &AggregateRow) -> String {
    let mut s = format!("algorithm={};k={};b={}", a.algorithm, a.k, a.batch_size);
    if let Some(p) = &a.pivot {
        s.push_str(&format!(";pivot={p};partial={}", a.partial));
    }
    if a.algorithm == Algorithm::Bubblesort {
        s.push_str(&format!(";cache={}", a.cached));
    }
    s
}

fn query_cells(r: &QueryRow) -> Vec<String> {
    let mut v = vec![String::new(); CSV_COLUMNS.len()];
    let cells = [
        (0, "query".to_string()),
        (1, r.dataset.clone()),
        (3, r.query_id.clone()),
        (4, r.label.clone()),
        (5, r.algorithm.to_string()),
        (6, r.k.to_string()),
        (7, r.batch_size.to_string()),
        (8, r.pivot.clone().unwrap_or_default()),
        (9, r.cached.to_string()),
        (10, r.partial.to_string()),
        (11, r.n.to_string()),
        (12, r.comparisons.to_string()),
        (13, r.inference_calls.to_string()),
        (14, r.cache_hits.to_string()),
        (15, r.batch_groups.to_string()),
        (16, opt_real(r.ndcg)),
        (17, r.error.clone().unwrap_or_default()),
    ];
    for (i, c) in cells {
        v[i] = c;
    }
    v
}

fn aggregate_cells(a: &AggregateRow) -> Vec<String> {
    let mut v = vec![String::new(); CSV_COLUMNS.len()];
    let cells = [
        (0, "aggregate".to_string()),
        (1, a.dataset.clone()),
        (2, a.pooling.map(|p| p.name().to_string()).unwrap_or_default()),
        (4, a.label.clone()),
        (5, a.algorithm.to_string()),
        (6, a.k.to_string()),
        (7, a.batch_size.to_string()),
        (8, a.pivot.clone().unwrap_or_default()),
        (9, a.cached.to_string()),
        (10, a.partial.to_string()),
        (18, a.queries.to_string()),
        (19, a.failures.to_string()),
        (20, real(a.comparisons_mean)),
        (21, real(a.comparisons_sd)),
        (22, real(a.inference_calls_mean)),
        (23, real(a.inference_calls_sd)),
        (24, real(a.cache_hits_mean)),
        (25, opt_real(a.ndcg_mean)),
        (26, opt_real(a.gain_vs_heapsort)),
        (27, opt_real(a.gain_vs_uncached)),
        (28, config_string(a)),
    ];
    for (i, c) in cells {
        v[i] = c;
    }
    v
}

/// Serializes the report into bytes without touching the filesystem.
pub fn render_report(report: &ExperimentReport, format: OutputFormat) -> Result<Vec<u8>, HarnessError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for r in &report.queries {
                w.write_record(query_cells(r))?;
            }
            for a in &report.aggregates {
                w.write_record(aggregate_cells(a))?;
            }
            w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
        }
        OutputFormat::Jsonl => {
            let mut out = Vec::new();
            let records = report
                .queries
                .iter()
                .cloned()
                .map(Record::Query)
                .chain(report.aggregates.iter().cloned().map(Record::Aggregate));
            for rec in records {
                serde_json::to_writer(&mut out, &rec)?;
                out.push(b'\n');
            }
            Ok(out)
        }
    }
}

/// Checks the aggregates against the per-query rows, then writes the report.
/// `-` as the path writes to stdout.
pub fn emit_report(report: &ExperimentReport, format: OutputFormat, path: &Path) -> Result<(), HarnessError> {
    verify_aggregates(report, 1e-9)?;
    let bytes = render_report(report, format)?;
    if path == Path::new("-") {
        let mut out = std::io::stdout().lock();
        out.write_all(&bytes).and_then(|_| out.flush()).map_err(|e| HarnessError::io(path, e))
    } else {
        fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn close_opt(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => close(a, b, tol),
        _ => false,
    }
}

/// Recomputes every aggregate row from the per-query rows and compares them
/// field by field; reals must agree within `tol` (relative above 1).
pub fn verify_aggregates(report: &ExperimentReport, tol: f64) -> Result<(), HarnessError> {
    let pooling = report
        .aggregates
        .iter()
        .find_map(|a| a.pooling)
        .unwrap_or(Pooling::Queries);
    let expected = aggregate_rows(&report.queries, pooling)?;
    if expected.len() != report.aggregates.len() {
        return Err(HarnessError::AggregateMismatch(format!(
            "{} aggregate rows, per-query rows imply {}",
            report.aggregates.len(),
            expected.len()
        )));
    }
    for (got, want) in report.aggregates.iter().zip(&expected) {
        let what = format!("{} / {}", got.dataset, got.label);
        let mismatch = |field: &str| HarnessError::AggregateMismatch(format!("{what}: {field}"));
        if got.dataset != want.dataset || got.pooling != want.pooling || agg_key(got) != agg_key(want) {
            return Err(mismatch("row identity or order"));
        }
        if (got.queries, got.failures) != (want.queries, want.failures) {
            return Err(mismatch("query or failure count"));
        }
        let reals = [
            ("comparisons_mean", got.comparisons_mean, want.comparisons_mean),
            ("comparisons_sd", got.comparisons_sd, want.comparisons_sd),
            ("inference_calls_mean", got.inference_calls_mean, want.inference_calls_mean),
            ("inference_calls_sd", got.inference_calls_sd, want.inference_calls_sd),
            ("cache_hits_mean", got.cache_hits_mean, want.cache_hits_mean),
        ];
        for (field, g, w) in reals {
            if !close(g, w, tol) {
                return Err(mismatch(&format!("{field} {g} vs {w}")));
            }
        }
        let opts = [
            ("ndcg_mean", got.ndcg_mean, want.ndcg_mean),
            ("gain_vs_heapsort", got.gain_vs_heapsort, want.gain_vs_heapsort),
            ("gain_vs_uncached", got.gain_vs_uncached, want.gain_vs_uncached),
        ];
        for (field, g, w) in opts {
            if !close_opt(g, w, tol) {
                return Err(mismatch(&format!("{field} {g:?} vs {w:?}")));
            }
        }
    }
    Ok(())
}

fn parse_csv(text: &str, src: &str) -> Result<ExperimentReport, HarnessError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(HarnessError::format(src, 1, "unexpected report header"));
    }
    let mut report = ExperimentReport::default();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let bad = |c: usize| HarnessError::format(src, line, format!("bad {} value {:?}", CSV_COLUMNS[c], cell(c)));
        macro_rules! num {
            ($c:expr) => {
                cell($c).parse().map_err(|_| bad($c))?
            };
        }
        macro_rules! opt {
            ($c:expr) => {
                match cell($c) {
                    "" => None,
                    s => Some(s.parse().map_err(|_| bad($c))?),
                }
            };
        }
        let text_opt = |c: usize| Some(cell(c).to_string()).filter(|s| !s.is_empty());
        let algorithm: Algorithm = cell(5).parse().map_err(|_| bad(5))?;
        match cell(0) {
            "query" => report.queries.push(QueryRow {
                dataset: cell(1).to_string(),
                query_id: cell(3).to_string(),
                label: cell(4).to_string(),
                algorithm,
                k: num!(6),
                batch_size: num!(7),
                pivot: text_opt(8),
                cached: num!(9),
                partial: num!(10),
                n: num!(11),
                comparisons: num!(12),
                inference_calls: num!(13),
                cache_hits: num!(14),
                batch_groups: num!(15),
                ndcg: opt!(16),
                error: text_opt(17),
            }),
            "aggregate" => report.aggregates.push(AggregateRow {
                dataset: cell(1).to_string(),
                pooling: match cell(2) {
                    "" => None,
                    "queries" => Some(Pooling::Queries),
                    "datasets" => Some(Pooling::Datasets),
                    _ => return Err(bad(2)),
                },
                label: cell(4).to_string(),
                algorithm,
                k: num!(6),
                batch_size: num!(7),
                pivot: text_opt(8),
                cached: num!(9),
                partial: num!(10),
                queries: num!(18),
                failures: num!(19),
                comparisons_mean: num!(20),
                comparisons_sd: num!(21),
                inference_calls_mean: num!(22),
                inference_calls_sd: num!(23),
                cache_hits_mean: num!(24),
                ndcg_mean: opt!(25),
                gain_vs_heapsort: opt!(26),
                gain_vs_uncached: opt!(27),
            }),
            _ => return Err(bad(0)),
        }
    }
    Ok(report)
}

fn parse_jsonl(text: &str, src: &str) -> Result<ExperimentReport, HarnessError> {
    let mut report = ExperimentReport::default();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(l).map_err(|e| HarnessError::format(src, i + 1, e.to_string()))? {
            Record::Query(q) => report.queries.push(q),
            Record::Aggregate(a) => report.aggregates.push(a),
        }
    }
    Ok(report)
}

pub fn parse_report(text: &str, format: OutputFormat, src: &str) -> Result<ExperimentReport, HarnessError> {
    match format {
        OutputFormat::Csv => parse_csv(text, src),
        OutputFormat::Jsonl => parse_jsonl(text, src),
    }
}

/// Reads a report back; the format is inferred from the first byte.
pub fn read_report(path: &Path) -> Result<ExperimentReport, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let format = if text.trim_start().starts_with('{') { OutputFormat::Jsonl } else { OutputFormat::Csv };
    parse_report(&text, format, &path.display().to_string())
}
