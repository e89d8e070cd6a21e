//! Instrumented top-k ranking algorithms.
//!
//! | algorithm  | batching | caching | top-k early exit |
//! |------------|----------|---------|------------------|
//! | heapsort   | no       | no      | k extractions    |
//! | bubblesort | no       | yes     | k passes         |
//! | quicksort  | yes      | no      | partial recursion|
//!
//! Unsupported cells are configuration errors, not silent no-ops.

mod bubblesort;
mod heapsort;
mod quicksort;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{ensure_unique, CostLedger, DocId, ModelError};
use crate::oracle::{BatchExecutor, Oracle, OracleError, TraceEntry};

pub use bubblesort::bubblesort_topk;
pub use heapsort::heapsort_topk;
pub use quicksort::{batch_partition, quicksort_topk, select_pivot};

#[derive(Debug, thiserror::Error)]
pub enum RankError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("candidate list is empty")]
    EmptyInput,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Heapsort,
    Bubblesort,
    Quicksort,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Heapsort => "heapsort",
            Algorithm::Bubblesort => "bubblesort",
            Algorithm::Quicksort => "quicksort",
        })
    }
}

impl FromStr for Algorithm {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "heapsort" | "heap" => Ok(Algorithm::Heapsort),
            "bubblesort" | "bubble" => Ok(Algorithm::Bubblesort),
            "quicksort" | "quick" => Ok(Algorithm::Quicksort),
            other => Err(RankError::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// How quicksort picks its partition pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PivotStrategy {
    /// Hoare's original: the first element of the segment.
    First,
    Middle,
    Random { seed: u64 },
    MedianOfThree,
}

impl PivotStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            PivotStrategy::First => "first",
            PivotStrategy::Middle => "middle",
            PivotStrategy::Random { .. } => "random",
            PivotStrategy::MedianOfThree => "median-of-three",
        }
    }

    /// Parses a strategy name; `seed` is only used for `random`.
    pub fn parse(name: &str, seed: u64) -> Result<Self, RankError> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "first" | "original" | "hoare" => Ok(PivotStrategy::First),
            "middle" => Ok(PivotStrategy::Middle),
            "random" => Ok(PivotStrategy::Random { seed }),
            "median-of-three" | "median3" | "median" => Ok(PivotStrategy::MedianOfThree),
            other => Err(RankError::InvalidConfig(format!("unknown pivot strategy {other:?}"))),
        }
    }

    pub const ALL_NAMES: [&'static str; 4] = ["first", "middle", "random", "median-of-three"];
}

impl fmt::Display for PivotStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    /// Quicksort only; must be 1 elsewhere.
    pub batch_size: usize,
    /// Bubblesort only.
    pub use_cache: bool,
    /// Quicksort only.
    pub pivot: PivotStrategy,
    /// Quicksort only: abandon segments entirely outside the top-k prefix.
    pub partial: bool,
}

impl AlgoConfig {
    pub fn heapsort(k: usize) -> Self {
        Self {
            algorithm: Algorithm::Heapsort,
            k,
            batch_size: 1,
            use_cache: false,
            pivot: PivotStrategy::First,
            partial: false,
        }
    }

    pub fn bubblesort(k: usize, use_cache: bool) -> Self {
        Self {
            algorithm: Algorithm::Bubblesort,
            use_cache,
            ..Self::heapsort(k)
        }
    }

    pub fn quicksort(k: usize, pivot: PivotStrategy, batch_size: usize, partial: bool) -> Self {
        Self {
            algorithm: Algorithm::Quicksort,
            k,
            batch_size,
            use_cache: false,
            pivot,
            partial,
        }
    }

    pub fn validate(&self) -> Result<(), RankError> {
        if self.k == 0 {
            return Err(RankError::InvalidConfig("k must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(RankError::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.batch_size > 1 && self.algorithm != Algorithm::Quicksort {
            return Err(RankError::InvalidConfig(format!(
                "{} cannot batch comparisons (batch size {})",
                self.algorithm, self.batch_size
            )));
        }
        if self.use_cache && self.algorithm != Algorithm::Bubblesort {
            return Err(RankError::InvalidConfig(format!("{} does not support caching", self.algorithm)));
        }
        Ok(())
    }

    /// Human-readable row label, e.g. `quicksort (median-of-three, b=2)`.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::Heapsort => "heapsort".to_string(),
            Algorithm::Bubblesort if self.use_cache => "bubblesort (cached)".to_string(),
            Algorithm::Bubblesort => "bubblesort (classic)".to_string(),
            Algorithm::Quicksort => {
                let full = if self.partial { "" } else { ", full" };
                format!("quicksort ({}, b={}{full})", self.pivot, self.batch_size)
            }
        }
    }
}

/// Ordered result, most relevant first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub ordered: Vec<DocId>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ranking: Ranking,
    pub ledger: CostLedger,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Validates input, clamps `k` to the list length, returns the effective `k`.
pub(crate) fn prepare(items: &[DocId], k: usize) -> Result<usize, RankError> {
    if items.is_empty() {
        return Err(RankError::EmptyInput);
    }
    if k == 0 {
        return Err(RankError::InvalidConfig("k must be >= 1".into()));
    }
    ensure_unique(items)?;
    if k > items.len() {
        log::warn!("k = {k} exceeds {} candidates; clamping", items.len());
        return Ok(items.len());
    }
    Ok(k)
}

pub(crate) fn require_unbatched(exec: &BatchExecutor, algorithm: Algorithm) -> Result<(), RankError> {
    if exec.batch_size() != 1 {
        return Err(RankError::InvalidConfig(format!(
            "{algorithm} cannot batch comparisons (batch size {})",
            exec.batch_size()
        )));
    }
    Ok(())
}

/// Runs one configured algorithm over `items` with a fresh executor. The
/// oracle is wrapped in a pair cache when the config asks for one.
pub fn run(config: &AlgoConfig, items: &[DocId], oracle: Oracle, trace: bool) -> Result<RunOutcome, RankError> {
    config.validate()?;
    let mut exec = BatchExecutor::new(config.batch_size)?;
    if trace {
        exec = exec.with_trace();
    }
    let mut oracle = if config.use_cache { Oracle::memoized(oracle) } else { oracle };
    let ranking = match config.algorithm {
        Algorithm::Heapsort => heapsort_topk(items, config.k, &mut oracle, &mut exec)?,
        Algorithm::Bubblesort => bubblesort_topk(items, config.k, &mut oracle, &mut exec)?,
        Algorithm::Quicksort => {
            quicksort_topk(items, config.k, config.pivot, config.partial, &mut oracle, &mut exec)?
        }
    };
    Ok(RunOutcome {
        ranking,
        ledger: exec.ledger(),
        trace: exec.take_trace(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsupported_optimizations_are_errors() {
        let mut h = AlgoConfig::heapsort(10);
        h.batch_size = 2;
        assert!(matches!(h.validate(), Err(RankError::InvalidConfig(_))));
        let mut h = AlgoConfig::heapsort(10);
        h.use_cache = true;
        assert!(h.validate().is_err());
        let mut b = AlgoConfig::bubblesort(10, true);
        assert!(b.validate().is_ok());
        b.batch_size = 4;
        assert!(b.validate().is_err());
        let mut q = AlgoConfig::quicksort(10, PivotStrategy::First, 128, true);
        assert!(q.validate().is_ok());
        q.use_cache = true;
        assert!(q.validate().is_err());
        assert!(AlgoConfig::heapsort(0).validate().is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(AlgoConfig::bubblesort(10, true).label(), "bubblesort (cached)");
        assert_eq!(
            AlgoConfig::quicksort(10, PivotStrategy::MedianOfThree, 2, true).label(),
            "quicksort (median-of-three, b=2)"
        );
        assert_eq!(
            AlgoConfig::quicksort(10, PivotStrategy::Random { seed: 3 }, 1, false).label(),
            "quicksort (random, b=1, full)"
        );
    }

    #[test]
    fn pivot_names_round_trip() {
        for name in PivotStrategy::ALL_NAMES {
            assert_eq!(PivotStrategy::parse(name, 0).unwrap().name(), name);
        }
        assert_eq!(PivotStrategy::parse("median_of_three", 0).unwrap(), PivotStrategy::MedianOfThree);
        assert!(PivotStrategy::parse("ninther", 0).is_err());
    }

    #[test]
    fn bad_inputs() {
        let o = || Oracle::score(Default::default()).unwrap();
        assert!(matches!(run(&AlgoConfig::heapsort(1), &[], o(), false), Err(RankError::EmptyInput)));
        let d = DocId::new("x").unwrap();
        assert!(matches!(
            run(&AlgoConfig::heapsort(1), &[d.clone(), d], o(), false),
            Err(RankError::Model(ModelError::DuplicateDoc(_)))
        ));
    }
}
