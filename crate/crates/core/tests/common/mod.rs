#![allow(dead_code)]

use std::collections::HashMap;
use std::io::Write;

use prp_sort::{AlgoConfig, DocId, Oracle, PivotStrategy};

pub fn ids(n: usize) -> Vec<DocId> {
    (0..n).map(|i| DocId::new(format!("d{i:03}")).unwrap()).collect()
}

pub fn score_map(docs: &[DocId], scores: &[f64]) -> HashMap<DocId, f64> {
    docs.iter().cloned().zip(scores.iter().copied()).collect()
}

pub fn score_oracle(docs: &[DocId], scores: &[f64]) -> Oracle {
    Oracle::score(score_map(docs, scores)).unwrap()
}

/// Reference top-k: sort by score descending, ties to the smaller id.
pub fn brute_force_topk(docs: &[DocId], scores: &[f64], k: usize) -> Vec<DocId> {
    let mut idx: Vec<usize> = (0..docs.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then_with(|| docs[a].cmp(&docs[b])));
    idx.into_iter().take(k.min(docs.len())).map(|i| docs[i].clone()).collect()
}

/// Every configuration the library supports for a given batch size.
pub fn all_configs(k: usize, batch_size: usize, pivot_seed: u64) -> Vec<AlgoConfig> {
    let mut out = Vec::new();
    if batch_size == 1 {
        out.push(AlgoConfig::heapsort(k));
        out.push(AlgoConfig::bubblesort(k, false));
        out.push(AlgoConfig::bubblesort(k, true));
    }
    for pivot in pivots(pivot_seed) {
        for partial in [true, false] {
            out.push(AlgoConfig::quicksort(k, pivot, batch_size, partial));
        }
    }
    out
}

pub fn pivots(seed: u64) -> [PivotStrategy; 4] {
    [
        PivotStrategy::First,
        PivotStrategy::Middle,
        PivotStrategy::Random { seed },
        PivotStrategy::MedianOfThree,
    ]
}

/// Every permutation of `0..n`, lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Writes straight to stderr so the line shows up even when the harness
/// captures test output.
pub fn verdict(criterion: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{tag} criterion {criterion}: {detail}");
}
