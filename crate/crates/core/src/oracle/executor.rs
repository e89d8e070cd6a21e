use std::collections::HashMap;

use crate::model::{canonical_pair, CostLedger, DocId, Preference};

use super::{ComparisonRequest, Oracle, OracleError};

/// One answered comparison, in submission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub request: ComparisonRequest,
    pub outcome: Preference,
    pub cached: bool,
    /// Sequence number of the `submit_group` call that carried the request.
    pub group: u64,
}

/// Turns groups of independent comparisons into counted inference calls.
///
/// A group of `g` requests with `h` cache hits costs `ceil((g - h) / batch_size)`
/// calls. Callers must only group requests whose construction does not depend
/// on each other's outcomes.
#[derive(Debug)]
pub struct BatchExecutor {
    batch_size: usize,
    ledger: CostLedger,
    trace: Option<Vec<TraceEntry>>,
    groups_submitted: u64,
}

impl BatchExecutor {
    pub fn new(batch_size: usize) -> Result<Self, OracleError> {
        if batch_size == 0 {
            return Err(OracleError::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(Self {
            batch_size,
            ledger: CostLedger::ZERO,
            trace: None,
            groups_submitted: 0,
        })
    }

    /// Records every answered comparison for later inspection.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn ledger(&self) -> CostLedger {
        self.ledger
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceEntry>> {
        self.trace.take()
    }

    pub fn submit_one(
        &mut self,
        oracle: &mut Oracle,
        req: ComparisonRequest,
    ) -> Result<Preference, OracleError> {
        Ok(self.submit_group(oracle, std::slice::from_ref(&req))?[0])
    }

    /// Answers every request in order. On a backend failure the group is
    /// aborted and the ledger holds only what was completed before it.
    pub fn submit_group(
        &mut self,
        oracle: &mut Oracle,
        group: &[ComparisonRequest],
    ) -> Result<Vec<Preference>, OracleError> {
        if group.is_empty() {
            return Ok(Vec::new());
        }
        let mut answers: Vec<Option<Preference>> = vec![None; group.len()];
        let mut cached = vec![false; group.len()];
        let mut misses: Vec<usize> = Vec::new();
        // (repeat index, index of the first occurrence of the same pair)
        let mut duplicates: Vec<(usize, usize)> = Vec::new();

        if let Oracle::Memoized(memo) = oracle {
            let mut pending: HashMap<(DocId, DocId), usize> = HashMap::new();
            for (i, req) in group.iter().enumerate() {
                if let Some(p) = memo.lookup(req)? {
                    answers[i] = Some(p);
                    cached[i] = true;
                    continue;
                }
                let key = canonical_pair(&req.first, &req.second)?;
                match pending.get(&(key.lo.clone(), key.hi.clone())) {
                    Some(&first) => duplicates.push((i, first)),
                    None => {
                        pending.insert((key.lo, key.hi), i);
                        misses.push(i);
                    }
                }
            }
        } else {
            for req in group {
                canonical_pair(&req.first, &req.second)?;
            }
            misses.extend(0..group.len());
        }

        let hits = (group.len() - misses.len() - duplicates.len()) as u64;
        self.ledger.comparisons += hits;
        self.ledger.cache_hits += hits;

        for chunk in misses.chunks(self.batch_size) {
            let reqs: Vec<ComparisonRequest> = chunk.iter().map(|&i| group[i].clone()).collect();
            let prefs = match &mut *oracle {
                Oracle::Memoized(memo) => memo.infer_misses(&reqs)?,
                other => other.infer_batch(&reqs)?,
            };
            self.ledger.inference_calls += 1;
            self.ledger.comparisons += chunk.len() as u64;
            for (&i, p) in chunk.iter().zip(prefs) {
                answers[i] = Some(p);
            }
        }
        if !misses.is_empty() {
            self.ledger.batch_groups += 1;
        }

        // a repeated pair inside one group is answered by the first occurrence
        for &(i, first) in &duplicates {
            let same_orientation = group[i].first == group[first].first;
            let p = answers[first].expect("miss answered above");
            answers[i] = Some(p.oriented(!same_orientation));
            cached[i] = true;
        }
        self.ledger.comparisons += duplicates.len() as u64;
        self.ledger.cache_hits += duplicates.len() as u64;

        let answers: Vec<Preference> = answers
            .into_iter()
            .map(|p| p.expect("every request answered"))
            .collect();
        let seq = self.groups_submitted;
        self.groups_submitted += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.extend(group.iter().zip(&answers).zip(&cached).map(|((r, &p), &c)| TraceEntry {
                request: r.clone(),
                outcome: p,
                cached: c,
                group: seq,
            }));
        }
        Ok(answers)
    }
}

pub fn executor_submit_group(
    exec: &mut BatchExecutor,
    oracle: &mut Oracle,
    group: &[ComparisonRequest],
) -> Result<Vec<Preference>, OracleError> {
    exec.submit_group(oracle, group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> DocId {
        DocId::new(s).unwrap()
    }

    fn oracle(n: usize) -> Oracle {
        Oracle::score((0..n).map(|i| (id(&format!("d{i:03}")), i as f64)).collect()).unwrap()
    }

    fn group(pairs: &[(usize, usize)]) -> Vec<ComparisonRequest> {
        pairs
            .iter()
            .map(|&(a, b)| ComparisonRequest::new(id(&format!("d{a:03}")), id(&format!("d{b:03}"))).unwrap())
            .collect()
    }

    fn chain(g: usize) -> Vec<ComparisonRequest> {
        group(&(0..g).map(|i| (i + 1, 0)).collect::<Vec<_>>())
    }

    #[test]
    fn ceiling_arithmetic() {
        let mut o = oracle(200);
        for (b, g, calls) in [(2, 5, 3), (1, 7, 7), (128, 99, 1), (3, 3, 1), (3, 4, 2)] {
            let mut ex = BatchExecutor::new(b).unwrap();
            ex.submit_group(&mut o, &chain(g)).unwrap();
            assert_eq!(ex.ledger(), CostLedger::new(g as u64, calls, 0, 1), "b={b} g={g}");
        }
    }

    #[test]
    fn empty_group_is_free() {
        let mut ex = BatchExecutor::new(4).unwrap();
        assert!(ex.submit_group(&mut oracle(2), &[]).unwrap().is_empty());
        assert_eq!(ex.ledger(), CostLedger::ZERO);
    }

    #[test]
    fn zero_batch_size_rejected() {
        assert!(BatchExecutor::new(0).is_err());
    }

    #[test]
    fn memoized_hits_cost_nothing() {
        let mut o = Oracle::memoized(oracle(10));
        let mut ex = BatchExecutor::new(2).unwrap().with_trace();
        ex.submit_group(&mut o, &group(&[(1, 0), (2, 0), (3, 0)])).unwrap();
        let out = ex.submit_group(&mut o, &group(&[(0, 1), (2, 0), (4, 0)])).unwrap();
        assert_eq!(out, vec![Preference::Second, Preference::First, Preference::First]);
        assert_eq!(ex.ledger(), CostLedger::new(6, 3, 2, 2));
        let cached: Vec<bool> = ex.trace().unwrap().iter().map(|t| t.cached).collect();
        assert_eq!(cached, vec![false, false, false, true, true, false]);

        // all-hit group: no call, no group
        ex.submit_group(&mut o, &group(&[(3, 0)])).unwrap();
        assert_eq!(ex.ledger(), CostLedger::new(7, 3, 3, 2));
    }

    #[test]
    fn duplicate_pair_inside_group_resolved_once() {
        let mut o = Oracle::memoized(oracle(10));
        let mut ex = BatchExecutor::new(8).unwrap();
        let out = ex.submit_group(&mut o, &group(&[(1, 2), (2, 1), (1, 2)])).unwrap();
        assert_eq!(out, vec![Preference::Second, Preference::First, Preference::Second]);
        assert_eq!(ex.ledger(), CostLedger::new(3, 1, 2, 1));
        if let Oracle::Memoized(m) = &o {
            assert_eq!(m.base_queries(), 1);
        }
    }

    #[test]
    fn failure_aborts_group_and_counts_only_completed_calls() {
        let mut o = oracle(4);
        let mut ex = BatchExecutor::new(2).unwrap();
        // third request names an unknown doc; first chunk completes
        let g = group(&[(1, 0), (2, 0), (9, 0), (3, 0)]);
        assert!(ex.submit_group(&mut o, &g).is_err());
        assert_eq!(ex.ledger(), CostLedger::new(2, 1, 0, 0));
    }

    proptest! {
        #[test]
        fn grouping_does_not_change_outcomes(
            pairs in proptest::collection::vec((0usize..20, 0usize..20), 0..40),
            b in 1usize..10,
            split in 0usize..40,
        ) {
            let pairs: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            let reqs = group(&pairs);
            let mut o = oracle(20);
            let one_by_one: Vec<_> = reqs.iter().map(|r| o.compare(r).unwrap()).collect();

            let split = split.min(reqs.len());
            let mut ex = BatchExecutor::new(b).unwrap();
            let mut grouped = ex.submit_group(&mut o, &reqs[..split]).unwrap();
            grouped.extend(ex.submit_group(&mut o, &reqs[split..]).unwrap());
            prop_assert_eq!(&grouped, &one_by_one);

            let ceil = |m: usize| m.div_ceil(b) as u64;
            let led = ex.ledger();
            prop_assert_eq!(led.inference_calls, ceil(split) + ceil(reqs.len() - split));
            prop_assert_eq!(led.comparisons, reqs.len() as u64);
            prop_assert!(led.is_consistent());
        }
    }
}
