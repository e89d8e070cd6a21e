//! Experiment runner: dataset ingestion, algorithm sweeps and report emission.

pub mod config;
pub mod experiment;
pub mod report;
mod synth;
pub mod trec;

use std::collections::HashMap;
use std::path::PathBuf;

use crate::algorithms::RankError;
use crate::metrics::RelevanceMap;
use crate::model::{Candidate, DocId};
use crate::oracle::OracleError;

pub use config::{DatasetSource, DatasetSpec, ExperimentConfig, OracleSpec, OutputFormat, Overrides, Pooling};
pub use experiment::{load_dataset, run_experiment, POOLED_DATASET, AggregateRow, ExperimentReport, QueryRow};
pub use report::{emit_report, parse_report, read_report, render_report, verify_aggregates, CSV_COLUMNS};
pub use synth::{generate_synthetic, write_synthetic};
pub use trec::{load_qrels, load_run_file};

pub const DEFAULT_DEPTH: usize = 100;
pub const DEFAULT_K: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("report aggregates disagree with per-query rows: {0}")]
    AggregateMismatch(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        HarnessError::Format {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}

/// One query's candidate list, in first-stage order.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub text: Option<String>,
    pub candidates: Vec<Candidate>,
    /// Ground-truth relevance scores for simulated judges.
    pub scores: Option<HashMap<DocId, f64>>,
}

impl Query {
    pub fn doc_ids(&self) -> Vec<DocId> {
        self.candidates.iter().map(|c| c.doc.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub queries: Vec<Query>,
    pub grades: Option<RelevanceMap>,
}
