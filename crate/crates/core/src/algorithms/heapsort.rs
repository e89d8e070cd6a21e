use crate::model::{DocId, Preference};
use crate::oracle::{BatchExecutor, ComparisonRequest, Oracle};

use super::{prepare, require_unbatched, Algorithm, RankError, Ranking};

/// Max-heap top-k. Every comparison depends on the previous outcome, so each
/// one is its own singleton group.
pub fn heapsort_topk(
    items: &[DocId],
    k: usize,
    oracle: &mut Oracle,
    exec: &mut BatchExecutor,
) -> Result<Ranking, RankError> {
    let k = prepare(items, k)?;
    require_unbatched(exec, Algorithm::Heapsort)?;
    if oracle.is_memoized() {
        return Err(RankError::InvalidConfig("heapsort does not support caching".into()));
    }

    let mut heap = items.to_vec();
    let n = heap.len();
    for root in (0..n / 2).rev() {
        sift_down(&mut heap, root, n, oracle, exec)?;
    }

    let mut ordered = Vec::with_capacity(k);
    let mut end = n;
    for extracted in 1..=k {
        ordered.push(heap[0].clone());
        end -= 1;
        heap.swap(0, end);
        // the heap is not needed after the last extraction
        if extracted < k {
            sift_down(&mut heap, 0, end, oracle, exec)?;
        }
    }
    Ok(Ranking { ordered })
}

fn sift_down(
    heap: &mut [DocId],
    mut root: usize,
    end: usize,
    oracle: &mut Oracle,
    exec: &mut BatchExecutor,
) -> Result<(), RankError> {
    loop {
        let left = 2 * root + 1;
        if left >= end {
            return Ok(());
        }
        let mut child = left;
        if left + 1 < end {
            let req = ComparisonRequest::new(heap[left].clone(), heap[left + 1].clone())?;
            if exec.submit_one(oracle, req)? == Preference::Second {
                child = left + 1;
            }
        }
        let req = ComparisonRequest::new(heap[child].clone(), heap[root].clone())?;
        if exec.submit_one(oracle, req)? == Preference::First {
            heap.swap(root, child);
            root = child;
        } else {
            return Ok(());
        }
    }
}
