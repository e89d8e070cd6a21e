//! Comparison oracles and the batching executor.
//!
//! An [`Oracle`] answers strict pairwise questions. Ground-truth ([`ScoreOracle`])
//! and noisy ([`NoisyOracle`]) oracles stand in for an LLM judge in simulations;
//! [`MemoizedOracle`] adds the per-run pair cache; [`LlmOracle`] talks to a
//! completion endpoint. [`BatchExecutor`] is the only place inference calls are
//! counted.

mod executor;
pub mod llm;
mod memo;

use std::collections::HashMap;

use crate::model::{canonical_pair, DocId, ModelError, Preference};
use crate::seed;

pub use executor::{executor_submit_group, BatchExecutor, TraceEntry};
pub use llm::{build_prp_prompt, llm_compare_batch, parse_label, LlmClient, LlmEndpoint, LlmOracle};
pub use memo::{memoized_compare, MemoizedOracle};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("document {0} is unknown to the oracle")]
    UnknownDoc(DocId),
    #[error("candidate {0} has no passage text")]
    MissingText(DocId),
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("invalid comparison request: {0}")]
    InvalidRequest(#[from] ModelError),
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
}

/// One pairwise question. `first != second` is enforced at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComparisonRequest {
    pub first: DocId,
    pub second: DocId,
}

impl ComparisonRequest {
    pub fn new(first: DocId, second: DocId) -> Result<Self, OracleError> {
        if first == second {
            return Err(ModelError::IdenticalPair(first).into());
        }
        Ok(Self { first, second })
    }

    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    pub fn winner(&self, pref: Preference) -> &DocId {
        match pref {
            Preference::First => &self.first,
            Preference::Second => &self.second,
        }
    }
}

/// Ground-truth oracle: the larger score wins, equal scores go to the
/// lexicographically smaller id.
#[derive(Debug, Clone)]
pub struct ScoreOracle {
    scores: HashMap<DocId, f64>,
}

impl ScoreOracle {
    pub fn new(scores: HashMap<DocId, f64>) -> Result<Self, OracleError> {
        if let Some((id, _)) = scores.iter().find(|(_, s)| s.is_nan()) {
            return Err(OracleError::InvalidConfig(format!("score for {id} is NaN")));
        }
        Ok(Self { scores })
    }

    pub fn score(&self, id: &DocId) -> Result<f64, OracleError> {
        self.scores
            .get(id)
            .copied()
            .ok_or_else(|| OracleError::UnknownDoc(id.clone()))
    }

    pub fn compare(&self, req: &ComparisonRequest) -> Result<Preference, OracleError> {
        let a = self.score(&req.first)?;
        let b = self.score(&req.second)?;
        let first_wins = a > b || (a == b && req.first < req.second);
        Ok(if first_wins {
            Preference::First
        } else {
            Preference::Second
        })
    }
}

/// Wraps a base oracle and flips its answer with a fixed probability.
///
/// The flip decision is a pure function of `(seed, unordered pair)` so a pair
/// answers the same way every time it is asked. With `per_event` set, an event
/// counter is mixed in and every query re-rolls.
#[derive(Debug)]
pub struct NoisyOracle {
    base: Box<Oracle>,
    flip_probability: f64,
    seed: u64,
    per_event: bool,
    events: u64,
}

impl NoisyOracle {
    pub fn new(base: Oracle, flip_probability: f64, seed: u64) -> Result<Self, OracleError> {
        if !(0.0..=1.0).contains(&flip_probability) {
            return Err(OracleError::InvalidConfig(format!(
                "flip probability {flip_probability} outside [0, 1]"
            )));
        }
        Ok(Self {
            base: Box::new(base),
            flip_probability,
            seed,
            per_event: false,
            events: 0,
        })
    }

    pub fn per_event(mut self, enabled: bool) -> Self {
        self.per_event = enabled;
        self
    }

    fn should_flip(&mut self, req: &ComparisonRequest) -> Result<bool, OracleError> {
        let key = canonical_pair(&req.first, &req.second)?;
        let mut parts = vec![
            seed::fnv1a(key.lo.as_str().as_bytes()),
            seed::fnv1a(key.hi.as_str().as_bytes()),
        ];
        if self.per_event {
            parts.push(self.events);
            self.events += 1;
        }
        let draw = seed::unit_interval(seed::derive(self.seed, &parts));
        Ok(draw < self.flip_probability)
    }
}

#[derive(Debug)]
pub enum Oracle {
    Score(ScoreOracle),
    Noisy(NoisyOracle),
    Memoized(MemoizedOracle),
    Llm(LlmOracle),
}

impl Oracle {
    pub fn score(scores: HashMap<DocId, f64>) -> Result<Self, OracleError> {
        ScoreOracle::new(scores).map(Oracle::Score)
    }

    pub fn noisy(base: Oracle, flip_probability: f64, seed: u64) -> Result<Self, OracleError> {
        NoisyOracle::new(base, flip_probability, seed).map(Oracle::Noisy)
    }

    pub fn memoized(base: Oracle) -> Self {
        Oracle::Memoized(MemoizedOracle::new(base))
    }

    pub fn is_memoized(&self) -> bool {
        matches!(self, Oracle::Memoized(_))
    }

    /// Answers a single request. Does not touch any ledger.
    pub fn compare(&mut self, req: &ComparisonRequest) -> Result<Preference, OracleError> {
        Ok(self.infer_batch(std::slice::from_ref(req))?.remove(0))
    }

    /// Answers all requests as one logical inference. Memoized layers below
    /// the top level consult and fill their cache silently.
    pub(crate) fn infer_batch(
        &mut self,
        reqs: &[ComparisonRequest],
    ) -> Result<Vec<Preference>, OracleError> {
        match self {
            Oracle::Score(s) => reqs.iter().map(|r| s.compare(r)).collect(),
            Oracle::Noisy(n) => {
                let base = n.base.infer_batch(reqs)?;
                reqs.iter()
                    .zip(base)
                    .map(|(r, p)| Ok(p.oriented(n.should_flip(r)?)))
                    .collect()
            }
            Oracle::Memoized(m) => reqs.iter().map(|r| m.compare(r).map(|(p, _)| p)).collect(),
            Oracle::Llm(l) => l.infer_batch(reqs),
        }
    }
}

/// `oracle_compare` in free-function form.
pub fn oracle_compare(oracle: &mut Oracle, req: &ComparisonRequest) -> Result<Preference, OracleError> {
    oracle.compare(req)
}
