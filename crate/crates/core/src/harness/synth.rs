use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::metrics::RelevanceMap;
use crate::model::{Candidate, DocId};
use crate::seed;

use super::{Dataset, HarnessError, Query};

fn width(count: usize) -> usize {
    count.saturating_sub(1).to_string().len()
}

/// Grade by score rank: top 10% get 3, next 20% get 2, next 30% get 1.
fn quantile_grade(rank: usize, n: usize) -> u32 {
    match rank * 10 {
        r if r < n => 3,
        r if r < 3 * n => 2,
        r if r < 6 * n => 1,
        _ => 0,
    }
}

/// Queries whose candidates carry a seeded random permutation of the scores
/// `1/n, 2/n, ..., 1`. Each query's stream is derived from the master seed
/// and the query index alone.
pub fn generate_synthetic(num_queries: usize, n: usize, master_seed: u64) -> Result<Dataset, HarnessError> {
    if num_queries == 0 || n == 0 {
        return Err(HarnessError::InvalidConfig(
            "synthetic datasets need at least one query and one candidate".into(),
        ));
    }
    // fixed minimum width so growing the query count keeps existing ids
    let (qw, dw) = (width(num_queries).max(4), width(n));
    let mut grades = RelevanceMap::new();
    let mut queries = Vec::with_capacity(num_queries);
    for qi in 0..num_queries {
        let qid = format!("q{qi:0qw$}");
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(master_seed, &[qi as u64]));
        let mut values: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        values.shuffle(&mut rng);

        let docs: Vec<DocId> = (0..n)
            .map(|j| DocId::new(format!("d{j:0dw$}")).expect("non-empty id"))
            .collect();
        let mut by_score: Vec<usize> = (0..n).collect();
        by_score.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        for (rank, &j) in by_score.iter().enumerate() {
            grades.insert(qid.clone(), docs[j].clone(), quantile_grade(rank, n));
        }
        let scores: HashMap<DocId, f64> = docs.iter().cloned().zip(values.iter().copied()).collect();
        queries.push(Query {
            id: qid,
            text: None,
            candidates: docs.into_iter().map(Candidate::new).collect(),
            scores: Some(scores),
        });
    }
    Ok(Dataset {
        name: "synthetic".to_string(),
        queries,
        grades: Some(grades),
    })
}

/// Writes `run.txt`, `qrels.txt` and `scores.txt` into `dir`. The run file
/// keeps the generated candidate order as its ranking.
pub fn write_synthetic(dataset: &Dataset, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let (mut run, mut qrels, mut scores) = (String::new(), String::new(), String::new());
    for q in &dataset.queries {
        let n = q.candidates.len();
        for (rank, c) in q.candidates.iter().enumerate() {
            let _ = writeln!(run, "{} Q0 {} {} {} synthetic", q.id, c.doc, rank + 1, n - rank);
            if let Some(grades) = &dataset.grades {
                let _ = writeln!(qrels, "{} 0 {} {}", q.id, c.doc, grades.grade(&q.id, &c.doc));
            }
            if let Some(s) = q.scores.as_ref().and_then(|s| s.get(&c.doc)) {
                let _ = writeln!(scores, "{} {} {}", q.id, c.doc, s);
            }
        }
    }
    for (name, body) in [("run.txt", run), ("qrels.txt", qrels), ("scores.txt", scores)] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(())
}
