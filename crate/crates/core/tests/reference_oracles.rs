//! Library runs checked against small independent re-implementations.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use prp_sort::algorithms::run;
use prp_sort::{AlgoConfig, DocId, PivotStrategy};

use common::*;

/// Score comparison with the library's documented tie rule.
fn beats(a: usize, b: usize, docs: &[DocId], scores: &[f64]) -> bool {
    scores[a] > scores[b] || (scores[a] == scores[b] && docs[a] < docs[b])
}

/// Plain bubblesort over indices; returns the sequence of compared pairs.
fn reference_bubblesort(docs: &[DocId], scores: &[f64], k: usize) -> (Vec<DocId>, Vec<(DocId, DocId)>) {
    let n = docs.len();
    let mut list: Vec<usize> = (0..n).collect();
    let mut pairs = Vec::new();
    for p in 0..k.min(n) {
        let mut swapped = false;
        for j in (p + 1..n).rev() {
            pairs.push((docs[list[j - 1]].clone(), docs[list[j]].clone()));
            if beats(list[j], list[j - 1], docs, scores) {
                list.swap(j - 1, j);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let top = list.iter().take(k.min(n)).map(|&i| docs[i].clone()).collect();
    (top, pairs)
}

/// Recursive quicksort with the first element as pivot and a stable split.
/// Returns the partition group sizes in processing order.
fn reference_quicksort_groups(list: Vec<usize>, lo: usize, k: usize, partial: bool, docs: &[DocId], scores: &[f64], out: &mut Vec<u64>) -> Vec<usize> {
    if list.len() < 2 || (partial && lo >= k) {
        return list;
    }
    let pivot = list[0];
    out.push(list.len() as u64 - 1);
    let (left, right): (Vec<usize>, Vec<usize>) = list[1..].iter().partition(|&&i| beats(i, pivot, docs, scores));
    let left_len = left.len();
    let mut sorted = reference_quicksort_groups(left, lo, k, partial, docs, scores, out);
    sorted.push(pivot);
    sorted.extend(reference_quicksort_groups(right, lo + left_len + 1, k, partial, docs, scores, out));
    sorted
}

fn scores_strategy() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (1usize..70).prop_flat_map(|n| (proptest::collection::vec(0u32..40, n).prop_map(|v| v.into_iter().map(f64::from).collect()), 1..=n + 2))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bubblesort_matches_reference_pair_sequence((scores, k) in scores_strategy()) {
        let docs = ids(scores.len());
        let (top, pairs) = reference_bubblesort(&docs, &scores, k);
        let out = run(&AlgoConfig::bubblesort(k, false), &docs, score_oracle(&docs, &scores), true).unwrap();
        prop_assert_eq!(&out.ranking.ordered, &top);
        let got: Vec<(DocId, DocId)> = out.trace.unwrap().into_iter().map(|e| (e.request.first, e.request.second)).collect();
        prop_assert_eq!(got, pairs);
    }

    #[test]
    fn cache_accounting_matches_replay_log((scores, k) in scores_strategy()) {
        let docs = ids(scores.len());
        let out = run(&AlgoConfig::bubblesort(k, true), &docs, score_oracle(&docs, &scores), true).unwrap();
        let mut seen: HashSet<(DocId, DocId)> = HashSet::new();
        let mut misses = 0u64;
        for e in out.trace.unwrap() {
            let (a, b) = (e.request.first.clone(), e.request.second.clone());
            let key = if a < b { (a, b) } else { (b, a) };
            let hit = !seen.insert(key);
            prop_assert_eq!(e.cached, hit);
            misses += u64::from(!hit);
        }
        prop_assert_eq!(out.ledger.inference_calls, misses);
        prop_assert_eq!(out.ledger.cache_hits, out.ledger.comparisons - out.ledger.inference_calls);
    }

    #[test]
    fn quicksort_first_pivot_matches_reference_groups(
        (scores, k) in scores_strategy(),
        partial in any::<bool>(),
        b in 1usize..20,
    ) {
        let docs = ids(scores.len());
        let mut groups = Vec::new();
        let sorted = reference_quicksort_groups((0..docs.len()).collect(), 0, k, partial, &docs, &scores, &mut groups);
        let want: Vec<DocId> = sorted.into_iter().take(k).map(|i| docs[i].clone()).collect();
        let out = run(&AlgoConfig::quicksort(k, PivotStrategy::First, b, partial), &docs, score_oracle(&docs, &scores), false).unwrap();
        prop_assert_eq!(out.ranking.ordered, want);
        prop_assert_eq!(out.ledger.comparisons, groups.iter().sum::<u64>());
        prop_assert_eq!(out.ledger.inference_calls, groups.iter().map(|m| m.div_ceil(b as u64)).sum::<u64>());
        prop_assert_eq!(out.ledger.batch_groups, groups.len() as u64);
    }
}

#[test]
fn heapsort_small_hand_counts() {
    // n = 3 descending: building the heap compares the two children, then the
    // winner with the root; the single extraction for k = 1 skips the sift.
    let docs = ids(3);
    let out = run(&AlgoConfig::heapsort(1), &docs, score_oracle(&docs, &[3.0, 2.0, 1.0]), false).unwrap();
    assert_eq!(out.ranking.ordered, vec![docs[0].clone()]);
    assert_eq!(out.ledger.comparisons, 2);
    assert_eq!(out.ledger.inference_calls, 2);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            prp_sort::harness::ExperimentConfig::load(&path, &Default::default())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
