use crate::model::{DocId, Preference};
use crate::oracle::{BatchExecutor, ComparisonRequest, Oracle};

use super::{prepare, require_unbatched, Algorithm, RankError, Ranking};

/// Top-k bubblesort. Pass `p` walks adjacent pairs from the back of the list
/// to position `p`, moving the winner forward, so positions `0..=p` are final
/// afterwards. Stops after `k` passes or the first pass without a swap.
///
/// Caching is whatever the oracle provides: pass an [`Oracle::Memoized`] to
/// reuse outcomes of pairs that stay adjacent across passes.
pub fn bubblesort_topk(
    items: &[DocId],
    k: usize,
    oracle: &mut Oracle,
    exec: &mut BatchExecutor,
) -> Result<Ranking, RankError> {
    let k = prepare(items, k)?;
    require_unbatched(exec, Algorithm::Bubblesort)?;

    let mut list = items.to_vec();
    let n = list.len();
    for pass in 0..k {
        let mut swapped = false;
        for j in (pass + 1..n).rev() {
            let req = ComparisonRequest::new(list[j - 1].clone(), list[j].clone())?;
            if exec.submit_one(oracle, req)? == Preference::Second {
                list.swap(j - 1, j);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    list.truncate(k);
    Ok(Ranking { ordered: list })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostLedger;

    fn ids(names: &[&str]) -> Vec<DocId> {
        names.iter().map(|n| DocId::new(*n).unwrap()).collect()
    }

    fn oracle() -> Oracle {
        Oracle::score(ids(&["d1", "d2", "d3", "d4"]).into_iter().zip([4.0, 3.0, 2.0, 1.0]).collect()).unwrap()
    }

    #[test]
    fn sorted_input_stops_after_one_pass() {
        for k in 1..=4 {
            let mut exec = BatchExecutor::new(1).unwrap();
            let r = bubblesort_topk(&ids(&["d1", "d2", "d3", "d4"]), k, &mut oracle(), &mut exec).unwrap();
            assert_eq!(r.len(), k);
            assert_eq!(exec.ledger(), CostLedger::new(3, 3, 0, 3));
        }
    }

    #[test]
    fn reverse_input_hand_trace() {
        // passes of 3, 2 and 1 comparisons; every compared pair is distinct
        let input = ids(&["d4", "d3", "d2", "d1"]);
        let mut exec = BatchExecutor::new(1).unwrap();
        let r = bubblesort_topk(&input, 4, &mut oracle(), &mut exec).unwrap();
        assert_eq!(r.ordered, ids(&["d1", "d2", "d3", "d4"]));
        assert_eq!(exec.ledger().comparisons, 6);

        let mut exec = BatchExecutor::new(1).unwrap();
        bubblesort_topk(&input, 4, &mut Oracle::memoized(oracle()), &mut exec).unwrap();
        assert_eq!(exec.ledger(), CostLedger::new(6, 6, 0, 6));
    }

    #[test]
    fn cache_hits_on_pairs_that_stay_adjacent() {
        // (d2, d3) is unswapped at the back in pass 0 and asked again in pass 1
        let input = ids(&["d4", "d1", "d2", "d3"]);
        let mut exec = BatchExecutor::new(1).unwrap().with_trace();
        let r = bubblesort_topk(&input, 2, &mut Oracle::memoized(oracle()), &mut exec).unwrap();
        assert_eq!(r.ordered, ids(&["d1", "d2"]));
        let hits: Vec<(&str, &str)> = exec
            .trace()
            .unwrap()
            .iter()
            .filter(|t| t.cached)
            .map(|t| (t.request.first.as_str(), t.request.second.as_str()))
            .collect();
        assert_eq!(hits, vec![("d2", "d3")]);
        assert_eq!(exec.ledger(), CostLedger::new(5, 4, 1, 4));
    }

    #[test]
    fn rejects_batching() {
        let mut exec = BatchExecutor::new(3).unwrap();
        assert!(bubblesort_topk(&ids(&["d1", "d2"]), 1, &mut oracle(), &mut exec).is_err());
    }
}
