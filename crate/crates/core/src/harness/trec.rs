//! TREC run / qrels readers plus the small TSV side files (query text, passage
//! text, ground-truth scores).
//!
//! All formats are whitespace separated UTF-8. Blank lines and lines starting
//! with `#` are skipped.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::metrics::RelevanceMap;
use crate::model::{Candidate, DocId};

use super::HarnessError;

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn doc_id(src: &str, line: usize, raw: &str) -> Result<DocId, HarnessError> {
    DocId::new(raw).map_err(|e| HarnessError::format(src, line, e.to_string()))
}

/// Per-query candidate lists, queries in order of first appearance.
pub type RunLists = Vec<(String, Vec<Candidate>)>;

/// Parses a 6-column run (`qid Q0 docid rank score tag`). Candidates are
/// ordered by rank and truncated to `depth`. A repeated `(qid, docid)` is an
/// error.
pub fn parse_run(text: &str, src: &str, depth: usize) -> Result<RunLists, HarnessError> {
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(i64, usize, Candidate)>> = HashMap::new();
    let mut seen: HashSet<(String, DocId)> = HashSet::new();
    for (line, l) in content_lines(text) {
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(HarnessError::format(
                src,
                line,
                format!("expected 6 columns (qid Q0 docid rank score tag), found {}", cols.len()),
            ));
        }
        if !cols[1].eq_ignore_ascii_case("Q0") && cols[1] != "0" {
            return Err(HarnessError::format(src, line, format!("second column must be Q0, found {:?}", cols[1])));
        }
        let qid = cols[0].to_string();
        let doc = doc_id(src, line, cols[2])?;
        let rank: i64 = cols[3]
            .parse()
            .map_err(|_| HarnessError::format(src, line, format!("rank {:?} is not an integer", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| HarnessError::format(src, line, format!("score {:?} is not a number", cols[4])))?;
        if !seen.insert((qid.clone(), doc.clone())) {
            return Err(HarnessError::format(src, line, format!("duplicate entry for query {qid}, document {doc}")));
        }
        let entry = rows.entry(qid.clone()).or_insert_with(|| {
            order.push(qid.clone());
            Vec::new()
        });
        entry.push((rank, line, Candidate::new(doc).with_score(score)));
    }
    Ok(order
        .into_iter()
        .map(|qid| {
            let mut list = rows.remove(&qid).unwrap_or_default();
            list.sort_by_key(|(rank, line, _)| (*rank, *line));
            list.truncate(depth);
            (qid, list.into_iter().map(|(_, _, c)| c).collect())
        })
        .collect())
}

pub fn load_run_file(path: &Path, depth: usize) -> Result<RunLists, HarnessError> {
    parse_run(&read(path)?, &path.display().to_string(), depth)
}

/// Parses 4-column qrels (`qid iteration docid grade`). Negative grades are
/// clamped to 0 with a warning.
pub fn parse_qrels(text: &str, src: &str) -> Result<RelevanceMap, HarnessError> {
    let mut map = RelevanceMap::new();
    for (line, l) in content_lines(text) {
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(HarnessError::format(
                src,
                line,
                format!("expected 4 columns (qid iteration docid grade), found {}", cols.len()),
            ));
        }
        let doc = doc_id(src, line, cols[2])?;
        let grade: i64 = cols[3]
            .parse()
            .map_err(|_| HarnessError::format(src, line, format!("grade {:?} is not an integer", cols[3])))?;
        let grade = if grade < 0 {
            log::warn!("{src}:{line}: negative grade {grade} clamped to 0");
            0
        } else {
            u32::try_from(grade).map_err(|_| HarnessError::format(src, line, "grade out of range"))?
        };
        map.insert(cols[0], doc, grade);
    }
    Ok(map)
}

pub fn load_qrels(path: &Path) -> Result<RelevanceMap, HarnessError> {
    parse_qrels(&read(path)?, &path.display().to_string())
}

/// `id<TAB>text` lines, used for query text and passage text.
pub fn parse_tsv_texts(text: &str, src: &str) -> Result<HashMap<String, String>, HarnessError> {
    let mut out = HashMap::new();
    for (line, l) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if l.trim().is_empty() || l.starts_with('#') {
            continue;
        }
        let (id, body) = l
            .split_once('\t')
            .ok_or_else(|| HarnessError::format(src, line, "expected id<TAB>text"))?;
        let id = id.trim();
        if id.is_empty() {
            return Err(HarnessError::format(src, line, "empty id"));
        }
        out.insert(id.to_string(), body.trim_end_matches(['\r', '\n']).to_string());
    }
    Ok(out)
}

pub fn load_tsv_texts(path: &Path) -> Result<HashMap<String, String>, HarnessError> {
    parse_tsv_texts(&read(path)?, &path.display().to_string())
}

/// 3-column `qid docid score` ground truth for simulated judges.
pub fn parse_scores(text: &str, src: &str) -> Result<HashMap<String, HashMap<DocId, f64>>, HarnessError> {
    let mut out: HashMap<String, HashMap<DocId, f64>> = HashMap::new();
    for (line, l) in content_lines(text) {
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(HarnessError::format(src, line, format!("expected 3 columns (qid docid score), found {}", cols.len())));
        }
        let doc = doc_id(src, line, cols[1])?;
        let score: f64 = cols[2]
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| HarnessError::format(src, line, format!("score {:?} is not a finite number", cols[2])))?;
        out.entry(cols[0].to_string()).or_default().insert(doc, score);
    }
    Ok(out)
}

pub fn load_scores(path: &Path) -> Result<HashMap<String, HashMap<DocId, f64>>, HarnessError> {
    parse_scores(&read(path)?, &path.display().to_string())
}
