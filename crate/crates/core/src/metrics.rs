//! Ranking quality and cost statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::DocId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty sample")]
    EmptySample,
    #[error("percent gain needs a positive baseline, got {0}")]
    ZeroBaseline(f64),
}

/// Graded judgments per query. Unjudged documents have grade 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelevanceMap {
    grades: HashMap<String, HashMap<DocId, u32>>,
}

impl RelevanceMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later judgments for the same pair overwrite earlier ones.
    pub fn insert(&mut self, query: impl Into<String>, doc: DocId, grade: u32) {
        self.grades.entry(query.into()).or_default().insert(doc, grade);
    }

    pub fn grade(&self, query: &str, doc: &DocId) -> u32 {
        self.grades
            .get(query)
            .and_then(|g| g.get(doc))
            .copied()
            .unwrap_or(0)
    }

    pub fn judged(&self, query: &str) -> impl Iterator<Item = (&DocId, u32)> {
        self.grades
            .get(query)
            .into_iter()
            .flat_map(|g| g.iter().map(|(d, &s)| (d, s)))
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    pub fn num_judgments(&self) -> usize {
        self.grades.values().map(HashMap::len).sum()
    }
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn dcg(grades: impl IntoIterator<Item = u32>, k: usize) -> f64 {
    grades
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| gain(g) / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG with exponential gain `2^g - 1` and `log2(rank + 1)` discount. The
/// ideal ordering is built from every judged document of the query, retrieved
/// or not. Returns 0 when the query has no relevant judgment.
pub fn ndcg_at_k(ranking: &[DocId], grades: &RelevanceMap, query: &str, k: usize) -> f64 {
    let mut ideal: Vec<u32> = grades.judged(query).map(|(_, g)| g).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal, k);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg(ranking.iter().map(|d| grades.grade(query, d)), k) / idcg
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

pub fn aggregate(values: &[f64]) -> Result<CostStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    // Welford
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len();
    Ok(CostStats {
        mean,
        sd: (m2 / n as f64).max(0.0).sqrt(),
        n,
    })
}

/// `100 * (baseline - optimized) / baseline`; negative when the optimized
/// variant costs more.
pub fn percent_gain(baseline: f64, optimized: f64) -> Result<f64, MetricsError> {
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(MetricsError::ZeroBaseline(baseline));
    }
    Ok(100.0 * (baseline - optimized) / baseline)
}
