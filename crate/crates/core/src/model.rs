//! Shared vocabulary: document ids, candidates, pairwise outcomes, canonical
//! pair keys and the per-run cost ledger.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("document id must be non-empty")]
    EmptyDocId,
    #[error("cannot compare document {0} with itself")]
    IdenticalPair(DocId),
    #[error("duplicate document id {0} in candidate list")]
    DuplicateDoc(DocId),
    #[error("cost counter overflow in field {0}")]
    CountOverflow(&'static str),
}

/// Opaque document identifier, unique within one query's candidate list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DocId(String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyDocId);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for DocId {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<DocId> for String {
    fn from(id: DocId) -> Self {
        id.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A ranked item: an id plus optional passage text and first-stage score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub doc: DocId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_stage_score: Option<f64>,
}

impl Candidate {
    pub fn new(doc: DocId) -> Self {
        Self {
            doc,
            text: None,
            first_stage_score: None,
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.first_stage_score = Some(score);
        self
    }
}

/// Rejects duplicate ids, keeping input order.
pub fn ensure_unique(ids: &[DocId]) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id) {
            return Err(ModelError::DuplicateDoc(id.clone()));
        }
    }
    Ok(())
}

/// Outcome of one strict pairwise comparison: which element of the ordered
/// request pair is more relevant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preference {
    First,
    Second,
}

impl Preference {
    pub fn flipped(self) -> Self {
        match self {
            Preference::First => Preference::Second,
            Preference::Second => Preference::First,
        }
    }

    /// Re-orients the outcome when `flip` is set.
    pub fn oriented(self, flip: bool) -> Self {
        if flip {
            self.flipped()
        } else {
            self
        }
    }
}

/// Unordered pair identity: `lo < hi`, with `flipped` recording whether the
/// original request was `(hi, lo)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairKey {
    pub lo: DocId,
    pub hi: DocId,
    pub flipped: bool,
}

impl PairKey {
    /// The orientation-free part of the key, used for cache lookup.
    pub fn unordered(&self) -> (DocId, DocId) {
        (self.lo.clone(), self.hi.clone())
    }
}

pub fn canonical_pair(a: &DocId, b: &DocId) -> Result<PairKey, ModelError> {
    match a.cmp(b) {
        std::cmp::Ordering::Equal => Err(ModelError::IdenticalPair(a.clone())),
        std::cmp::Ordering::Less => Ok(PairKey {
            lo: a.clone(),
            hi: b.clone(),
            flipped: false,
        }),
        std::cmp::Ordering::Greater => Ok(PairKey {
            lo: b.clone(),
            hi: a.clone(),
            flipped: true,
        }),
    }
}

/// Cost accounting for one algorithm run.
///
/// `comparisons` counts every pairwise outcome the algorithm consumed, whether
/// it came from an inference or from the cache; `inference_calls` counts
/// backend invocations, each of which may answer several comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostLedger {
    pub comparisons: u64,
    pub inference_calls: u64,
    pub cache_hits: u64,
    pub batch_groups: u64,
}

impl CostLedger {
    pub const ZERO: CostLedger = CostLedger {
        comparisons: 0,
        inference_calls: 0,
        cache_hits: 0,
        batch_groups: 0,
    };

    pub fn new(comparisons: u64, inference_calls: u64, cache_hits: u64, batch_groups: u64) -> Self {
        Self {
            comparisons,
            inference_calls,
            cache_hits,
            batch_groups,
        }
    }

    /// Comparisons answered by an inference rather than the cache.
    pub fn inference_resolved(&self) -> u64 {
        self.comparisons.saturating_sub(self.cache_hits)
    }

    pub fn merge(&self, other: &CostLedger) -> Result<CostLedger, ModelError> {
        let add = |a: u64, b: u64, field| a.checked_add(b).ok_or(ModelError::CountOverflow(field));
        Ok(CostLedger {
            comparisons: add(self.comparisons, other.comparisons, "comparisons")?,
            inference_calls: add(self.inference_calls, other.inference_calls, "inference_calls")?,
            cache_hits: add(self.cache_hits, other.cache_hits, "cache_hits")?,
            batch_groups: add(self.batch_groups, other.batch_groups, "batch_groups")?,
        })
    }

    /// Checks the structural invariants every completed run must satisfy.
    pub fn is_consistent(&self) -> bool {
        self.cache_hits <= self.comparisons
            && self.inference_calls <= self.inference_resolved()
            && (self.inference_calls > 0 || self.inference_resolved() == 0)
            && self.batch_groups <= self.inference_calls
    }
}

pub fn ledger_merge(a: &CostLedger, b: &CostLedger) -> Result<CostLedger, ModelError> {
    a.merge(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> DocId {
        DocId::new(s).unwrap()
    }

    #[test]
    fn canonical_pair_examples() {
        let k = canonical_pair(&id("d1"), &id("d2")).unwrap();
        assert_eq!((k.lo.as_str(), k.hi.as_str(), k.flipped), ("d1", "d2", false));
        let k = canonical_pair(&id("d2"), &id("d1")).unwrap();
        assert_eq!((k.lo.as_str(), k.hi.as_str(), k.flipped), ("d1", "d2", true));
        assert_eq!(
            canonical_pair(&id("d1"), &id("d1")),
            Err(ModelError::IdenticalPair(id("d1")))
        );
    }

    #[test]
    fn empty_id_rejected() {
        assert_eq!(DocId::new(""), Err(ModelError::EmptyDocId));
        assert!(serde_json::from_str::<DocId>("\"\"").is_err());
    }

    #[test]
    fn duplicates_detected() {
        let ids = [id("a"), id("b"), id("a")];
        assert_eq!(ensure_unique(&ids), Err(ModelError::DuplicateDoc(id("a"))));
        assert!(ensure_unique(&ids[..2]).is_ok());
    }

    #[test]
    fn merge_examples() {
        let a = CostLedger::new(5, 3, 2, 3);
        assert_eq!(a.merge(&CostLedger::ZERO).unwrap(), a);
        assert_eq!(
            a.merge(&CostLedger::new(4, 2, 2, 2)).unwrap(),
            CostLedger::new(9, 5, 4, 5)
        );
        let big = CostLedger::new(u64::MAX, 0, 0, 0);
        assert_eq!(
            big.merge(&CostLedger::new(1, 0, 0, 0)),
            Err(ModelError::CountOverflow("comparisons"))
        );
    }

    #[test]
    fn merge_of_many_matches_fieldwise_sums() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let ledgers: Vec<CostLedger> = (0..100)
            .map(|_| {
                CostLedger::new(
                    rng.gen_range(0..10_000),
                    rng.gen_range(0..10_000),
                    rng.gen_range(0..10_000),
                    rng.gen_range(0..10_000),
                )
            })
            .collect();
        let merged = ledgers
            .iter()
            .try_fold(CostLedger::ZERO, |acc, l| ledger_merge(&acc, l))
            .unwrap();
        let mut sums = [0u64; 4];
        for l in &ledgers {
            sums[0] += l.comparisons;
            sums[1] += l.inference_calls;
            sums[2] += l.cache_hits;
            sums[3] += l.batch_groups;
        }
        assert_eq!(merged, CostLedger::new(sums[0], sums[1], sums[2], sums[3]));
    }

    fn ledger() -> impl Strategy<Value = CostLedger> {
        (0..1u64 << 40, 0..1u64 << 40, 0..1u64 << 40, 0..1u64 << 40)
            .prop_map(|(a, b, c, d)| CostLedger::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in ledger(), b in ledger(), c in ledger()) {
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(
                a.merge(&b).unwrap().merge(&c).unwrap(),
                a.merge(&b.merge(&c).unwrap()).unwrap()
            );
        }

        #[test]
        fn canonical_pair_is_symmetric(a in "[a-z0-9]{1,6}", b in "[a-z0-9]{1,6}") {
            prop_assume!(a != b);
            let (a, b) = (id(&a), id(&b));
            let ab = canonical_pair(&a, &b).unwrap();
            let ba = canonical_pair(&b, &a).unwrap();
            prop_assert_eq!(&ab.lo, &ba.lo);
            prop_assert_eq!(&ab.hi, &ba.hi);
            prop_assert_ne!(ab.flipped, ba.flipped);
            prop_assert!(ab.lo < ab.hi);
            // re-canonicalizing an already canonical pair is a no-op
            let again = canonical_pair(&ab.lo, &ab.hi).unwrap();
            prop_assert_eq!((again.lo, again.hi, again.flipped), (ab.lo, ab.hi, false));
        }
    }
}
