use std::collections::HashMap;

use crate::model::{canonical_pair, DocId, Preference};

use super::{ComparisonRequest, Oracle, OracleError};

/// Pair cache over a base oracle. Outcomes are stored in canonical orientation
/// (as if asked `(lo, hi)`) and re-oriented on lookup, so `(a, b)` and `(b, a)`
/// share one entry.
#[derive(Debug)]
pub struct MemoizedOracle {
    pub(crate) base: Box<Oracle>,
    cache: HashMap<(DocId, DocId), Preference>,
    base_queries: u64,
}

impl MemoizedOracle {
    pub fn new(base: Oracle) -> Self {
        Self {
            base: Box::new(base),
            cache: HashMap::new(),
            base_queries: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }

    /// How many comparisons have been forwarded to the base oracle.
    pub fn base_queries(&self) -> u64 {
        self.base_queries
    }

    pub fn lookup(&self, req: &ComparisonRequest) -> Result<Option<Preference>, OracleError> {
        let key = canonical_pair(&req.first, &req.second)?;
        Ok(self
            .cache
            .get(&(key.lo, key.hi))
            .map(|p| p.oriented(key.flipped)))
    }

    pub(crate) fn store(&mut self, req: &ComparisonRequest, pref: Preference) -> Result<(), OracleError> {
        let key = canonical_pair(&req.first, &req.second)?;
        self.cache
            .insert((key.lo, key.hi), pref.oriented(key.flipped));
        Ok(())
    }

    /// Resolves misses against the base oracle as one logical inference and
    /// caches the answers. Nothing is cached if the base fails.
    pub(crate) fn infer_misses(
        &mut self,
        reqs: &[ComparisonRequest],
    ) -> Result<Vec<Preference>, OracleError> {
        let prefs = self.base.infer_batch(reqs)?;
        self.base_queries += reqs.len() as u64;
        for (r, p) in reqs.iter().zip(&prefs) {
            self.store(r, *p)?;
        }
        Ok(prefs)
    }

    /// Returns the outcome and whether it came from the cache.
    pub fn compare(&mut self, req: &ComparisonRequest) -> Result<(Preference, bool), OracleError> {
        if let Some(p) = self.lookup(req)? {
            return Ok((p, true));
        }
        let p = self.infer_misses(std::slice::from_ref(req))?.remove(0);
        Ok((p, false))
    }
}

pub fn memoized_compare(
    memo: &mut MemoizedOracle,
    req: &ComparisonRequest,
) -> Result<(Preference, bool), OracleError> {
    memo.compare(req)
}
