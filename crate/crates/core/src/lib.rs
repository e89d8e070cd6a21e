//! Top-k pairwise ranking where the unit of cost is the inference call.
//!
//! Three comparison sorts are instrumented to count both comparisons and
//! backend calls: heapsort, bubblesort with an optional pair cache, and
//! quicksort whose partition step batches every element-vs-pivot comparison
//! into `ceil(m / batch_size)` calls, with optional early termination outside
//! the top-k prefix.

pub mod algorithms;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod seed;

pub use algorithms::{AlgoConfig, Algorithm, PivotStrategy, RankError, Ranking, RunOutcome};
pub use model::{canonical_pair, ledger_merge, Candidate, CostLedger, DocId, ModelError, PairKey, Preference};
pub use oracle::{BatchExecutor, ComparisonRequest, Oracle, OracleError};
