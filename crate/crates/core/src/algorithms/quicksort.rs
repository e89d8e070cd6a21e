use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{DocId, Preference};
use crate::oracle::{BatchExecutor, ComparisonRequest, Oracle};

use super::{prepare, PivotStrategy, RankError, Ranking};

/// Picks a pivot inside `segment` and returns its index relative to the
/// segment start.
///
/// Median-of-three submits first/middle/last as one group of three
/// comparisons and returns the element that wins exactly one of its two
/// matches. A cyclic outcome falls back to the middle element. Segments
/// shorter than three use the first element at no cost.
pub fn select_pivot(
    segment: &[DocId],
    strategy: PivotStrategy,
    rng: &mut ChaCha8Rng,
    exec: &mut BatchExecutor,
    oracle: &mut Oracle,
) -> Result<usize, RankError> {
    let len = segment.len();
    if len == 0 {
        return Err(RankError::EmptyInput);
    }
    if len == 1 {
        return Ok(0);
    }
    let middle = (len - 1) / 2;
    match strategy {
        PivotStrategy::First => Ok(0),
        PivotStrategy::Middle => Ok(middle),
        PivotStrategy::Random { .. } => Ok(rng.gen_range(0..len)),
        PivotStrategy::MedianOfThree if len < 3 => Ok(0),
        PivotStrategy::MedianOfThree => {
            let cand = [0, middle, len - 1];
            let matches = [(0, 1), (0, 2), (1, 2)];
            let group = matches
                .iter()
                .map(|&(a, b)| ComparisonRequest::new(segment[cand[a]].clone(), segment[cand[b]].clone()))
                .collect::<Result<Vec<_>, _>>()?;
            let outcomes = exec.submit_group(oracle, &group)?;
            let mut wins = [0u8; 3];
            for (&(a, b), pref) in matches.iter().zip(outcomes) {
                match pref {
                    Preference::First => wins[a] += 1,
                    Preference::Second => wins[b] += 1,
                }
            }
            if wins == [1, 1, 1] {
                return Ok(middle);
            }
            let median = wins.iter().position(|&w| w == 1).expect("transitive triple has a median");
            Ok(cand[median])
        }
    }
}

/// Compares every non-pivot element against the pivot in one group, then
/// rearranges `segment` stably: winners, pivot, the rest. Returns the pivot's
/// new index within the segment.
pub fn batch_partition(
    segment: &mut [DocId],
    pivot: usize,
    exec: &mut BatchExecutor,
    oracle: &mut Oracle,
) -> Result<usize, RankError> {
    if pivot >= segment.len() {
        return Err(RankError::InvalidConfig(format!(
            "pivot index {pivot} outside segment of length {}",
            segment.len()
        )));
    }
    let pivot_id = segment[pivot].clone();
    let others: Vec<DocId> = segment
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pivot)
        .map(|(_, d)| d.clone())
        .collect();
    let group = others
        .iter()
        .map(|d| ComparisonRequest::new(d.clone(), pivot_id.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes = exec.submit_group(oracle, &group)?;

    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (d, pref) in others.into_iter().zip(outcomes) {
        match pref {
            Preference::First => left.push(d),
            Preference::Second => right.push(d),
        }
    }
    let pos = left.len();
    for (slot, d) in segment
        .iter_mut()
        .zip(left.into_iter().chain(std::iter::once(pivot_id)).chain(right))
    {
        *slot = d;
    }
    Ok(pos)
}

/// Quicksort with a batched partition step. With `partial` set, segments that
/// lie entirely at or beyond position `k` are never sorted.
pub fn quicksort_topk(
    items: &[DocId],
    k: usize,
    pivot: PivotStrategy,
    partial: bool,
    oracle: &mut Oracle,
    exec: &mut BatchExecutor,
) -> Result<Ranking, RankError> {
    let k = prepare(items, k)?;
    if oracle.is_memoized() {
        return Err(RankError::InvalidConfig("quicksort does not support caching".into()));
    }
    let seed = match pivot {
        PivotStrategy::Random { seed } => seed,
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut list = items.to_vec();

    let wanted = |lo: usize, hi: usize| hi - lo >= 2 && (!partial || lo < k);
    // half-open segments; the left child is pushed last so it is processed first
    let mut work = vec![(0, list.len())];
    while let Some((lo, hi)) = work.pop() {
        if !wanted(lo, hi) {
            continue;
        }
        let p = select_pivot(&list[lo..hi], pivot, &mut rng, exec, oracle)?;
        let mid = lo + batch_partition(&mut list[lo..hi], p, exec, oracle)?;
        if wanted(mid + 1, hi) {
            work.push((mid + 1, hi));
        }
        if wanted(lo, mid) {
            work.push((lo, mid));
        }
    }
    list.truncate(k);
    Ok(Ranking { ordered: list })
}
