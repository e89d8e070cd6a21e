//! TOML experiment configuration plus command-line overrides.
//!
//! ```toml
//! seed = 7
//! k = 10
//!
//! [[datasets]]
//! name = "synthetic"
//! synthetic = { num_queries = 200, n = 100 }
//!
//! [oracle]
//! kind = "score"
//!
//! [[algorithms]]
//! algorithm = "quicksort"
//! pivot = ["first", "median-of-three"]
//! batch_size = [1, 2, 128]
//!
//! [output]
//! path = "report.csv"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgoConfig, Algorithm, PivotStrategy};
use crate::oracle::LlmEndpoint;

use super::{HarnessError, DEFAULT_DEPTH, DEFAULT_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(OutputFormat::Jsonl),
            other => Err(HarnessError::InvalidConfig(format!("unknown output format {other:?}"))),
        }
    }
}

/// How the cross-dataset rows are pooled when a config lists several datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Every query of every dataset weighs the same.
    #[default]
    Queries,
    /// Mean of the per-dataset means; the SD is taken over those means.
    Datasets,
}

impl Pooling {
    pub fn name(&self) -> &'static str {
        match self {
            Pooling::Queries => "queries",
            Pooling::Datasets => "datasets",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic {
        num_queries: usize,
        n: usize,
        seed: u64,
    },
    Trec {
        run: PathBuf,
        qrels: Option<PathBuf>,
        /// `qid<TAB>query text`
        queries: Option<PathBuf>,
        /// `docid<TAB>passage text`
        corpus: Option<PathBuf>,
        /// `qid docid score`, ground truth for the simulated judges
        scores: Option<PathBuf>,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    Score,
    Noisy {
        flip_probability: f64,
        seed: u64,
        per_event: bool,
    },
    Llm(LlmEndpoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub ndcg_k: usize,
    pub pooling: Pooling,
    pub datasets: Vec<DatasetSpec>,
    pub oracle: OracleSpec,
    pub algorithms: Vec<AlgoConfig>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Command-line flags. Set fields win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Replaces the whole algorithm matrix with a single entry.
    pub algo: Option<Algorithm>,
    pub batch_size: Option<usize>,
    pub pivot: Option<String>,
    pub cache: Option<bool>,
    /// Sets every algorithm's k and the NDCG cutoff.
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_k")]
    k: usize,
    ndcg_k: Option<usize>,
    #[serde(default)]
    pooling: Pooling,
    datasets: Vec<RawDataset>,
    #[serde(default)]
    oracle: RawOracle,
    algorithms: Vec<RawAlgo>,
    #[serde(default)]
    output: RawOutput,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_depth() -> usize {
    DEFAULT_DEPTH
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthetic {
    num_queries: usize,
    n: usize,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: Option<String>,
    synthetic: Option<RawSynthetic>,
    run: Option<PathBuf>,
    qrels: Option<PathBuf>,
    queries: Option<PathBuf>,
    corpus: Option<PathBuf>,
    scores: Option<PathBuf>,
    #[serde(default = "default_depth")]
    depth: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum OracleKind {
    #[default]
    Score,
    Noisy,
    Llm,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    #[serde(default)]
    kind: OracleKind,
    flip_probability: Option<f64>,
    seed: Option<u64>,
    #[serde(default)]
    per_event: bool,
    llm: Option<LlmEndpoint>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgo {
    algorithm: Algorithm,
    k: Option<usize>,
    batch_size: Option<OneOrMany<usize>>,
    pivot: Option<OneOrMany<String>>,
    pivot_seed: Option<u64>,
    partial: Option<OneOrMany<bool>>,
    cache: Option<OneOrMany<bool>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    #[serde(default)]
    format: OutputFormat,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::InvalidConfig(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base, overrides)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Self, HarnessError> {
        let mut raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        apply_overrides(&mut raw, overrides);
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };

        let seed = raw.seed;
        let ndcg_k = raw.ndcg_k.unwrap_or(raw.k);
        if ndcg_k == 0 {
            return Err(invalid("ndcg_k must be >= 1"));
        }
        if raw.datasets.is_empty() {
            return Err(invalid("no datasets configured"));
        }

        let mut datasets = Vec::with_capacity(raw.datasets.len());
        for (i, d) in raw.datasets.into_iter().enumerate() {
            let source = match (d.synthetic, d.run) {
                (Some(s), None) => {
                    if d.qrels.is_some() || d.queries.is_some() || d.corpus.is_some() || d.scores.is_some() {
                        return Err(invalid("synthetic datasets take no input files"));
                    }
                    DatasetSource::Synthetic {
                        num_queries: s.num_queries,
                        n: s.n,
                        seed: s.seed.unwrap_or(seed),
                    }
                }
                (None, Some(run)) => {
                    if d.depth == 0 {
                        return Err(invalid("depth must be >= 1"));
                    }
                    DatasetSource::Trec {
                        run: resolve(run),
                        qrels: d.qrels.map(resolve),
                        queries: d.queries.map(resolve),
                        corpus: d.corpus.map(resolve),
                        scores: d.scores.map(resolve),
                        depth: d.depth,
                    }
                }
                _ => return Err(invalid(format!("dataset #{} needs exactly one of `synthetic` or `run`", i + 1))),
            };
            let name = d.name.unwrap_or_else(|| match &source {
                DatasetSource::Synthetic { .. } => "synthetic".to_string(),
                DatasetSource::Trec { run, .. } => run
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("dataset{}", i + 1)),
            });
            datasets.push(DatasetSpec { name, source });
        }
        for (i, d) in datasets.iter().enumerate() {
            if datasets[..i].iter().any(|e| e.name == d.name) {
                return Err(invalid(format!("duplicate dataset name {:?}", d.name)));
            }
            if d.name == super::experiment::POOLED_DATASET {
                return Err(invalid(format!("dataset name {:?} is reserved", d.name)));
            }
        }

        let oracle = match raw.oracle.kind {
            OracleKind::Score => OracleSpec::Score,
            OracleKind::Noisy => OracleSpec::Noisy {
                flip_probability: raw
                    .oracle
                    .flip_probability
                    .ok_or_else(|| invalid("noisy oracle needs flip_probability"))?,
                seed: raw.oracle.seed.unwrap_or(seed),
                per_event: raw.oracle.per_event,
            },
            OracleKind::Llm => {
                let ep = raw.oracle.llm.ok_or_else(|| invalid("llm oracle needs an [oracle.llm] table"))?;
                ep.validate()?;
                OracleSpec::Llm(ep)
            }
        };
        if let OracleSpec::Noisy { flip_probability, .. } = oracle {
            if !(0.0..=1.0).contains(&flip_probability) {
                return Err(invalid(format!("flip_probability {flip_probability} outside [0, 1]")));
            }
        }
        if let OracleSpec::Llm(_) = oracle {
            for d in &datasets {
                match &d.source {
                    DatasetSource::Synthetic { .. } => {
                        return Err(invalid(format!(
                            "dataset {:?}: synthetic data has no text; use a score or noisy oracle",
                            d.name
                        )))
                    }
                    DatasetSource::Trec { queries, corpus, .. } => {
                        if queries.is_none() || corpus.is_none() {
                            return Err(invalid(format!(
                                "dataset {:?}: the llm oracle needs `queries` and `corpus` text files",
                                d.name
                            )));
                        }
                    }
                }
            }
        }

        let mut algorithms = Vec::new();
        for a in &raw.algorithms {
            for cfg in expand(a, raw.k, seed)? {
                if algorithms.contains(&cfg) {
                    return Err(invalid(format!("algorithm {} (k={}) listed twice", cfg.label(), cfg.k)));
                }
                algorithms.push(cfg);
            }
        }
        if algorithms.is_empty() {
            return Err(invalid("no algorithms configured"));
        }

        Ok(ExperimentConfig {
            seed,
            ndcg_k,
            pooling: raw.pooling,
            datasets,
            oracle,
            algorithms,
            output: raw.output.path.map(|p| if overrides.out.is_some() { p } else { resolve(p) }),
            format: raw.output.format,
        })
    }
}

fn apply_overrides(raw: &mut RawConfig, o: &Overrides) {
    if let Some(seed) = o.seed {
        raw.seed = seed;
    }
    if let Some(k) = o.k {
        raw.k = k;
        raw.ndcg_k = Some(k);
        for a in &mut raw.algorithms {
            a.k = Some(k);
        }
    }
    if let Some(algorithm) = o.algo {
        raw.algorithms = vec![RawAlgo {
            algorithm,
            k: o.k,
            batch_size: None,
            pivot: None,
            pivot_seed: None,
            partial: None,
            cache: None,
        }];
    }
    for a in &mut raw.algorithms {
        match a.algorithm {
            Algorithm::Quicksort => {
                if let Some(b) = o.batch_size {
                    a.batch_size = Some(OneOrMany::One(b));
                }
                if let Some(p) = &o.pivot {
                    a.pivot = Some(OneOrMany::One(p.clone()));
                }
            }
            Algorithm::Bubblesort => {
                if let Some(c) = o.cache {
                    a.cache = Some(OneOrMany::One(c));
                }
            }
            Algorithm::Heapsort => {}
        }
    }
    if let Some(f) = o.format {
        raw.output.format = f;
    }
    if let Some(out) = &o.out {
        raw.output.path = Some(out.clone());
    }
}

/// Cartesian product of the list-valued fields of one `[[algorithms]]` entry.
fn expand(a: &RawAlgo, default_k: usize, master_seed: u64) -> Result<Vec<AlgoConfig>, HarnessError> {
    let k = a.k.unwrap_or(default_k);
    let reject = |field: &str, present: bool| {
        if present {
            Err(invalid(format!("{} does not take `{field}`", a.algorithm)))
        } else {
            Ok(())
        }
    };
    let out = match a.algorithm {
        Algorithm::Heapsort => {
            reject("pivot", a.pivot.is_some())?;
            reject("partial", a.partial.is_some())?;
            reject("pivot_seed", a.pivot_seed.is_some())?;
            // present-but-unsupported batching or caching fails validation below
            let mut c = AlgoConfig::heapsort(k);
            c.batch_size = single(&a.batch_size, 1, "batch_size")?;
            c.use_cache = single(&a.cache, false, "cache")?;
            vec![c]
        }
        Algorithm::Bubblesort => {
            reject("pivot", a.pivot.is_some())?;
            reject("partial", a.partial.is_some())?;
            reject("pivot_seed", a.pivot_seed.is_some())?;
            let batch = single(&a.batch_size, 1, "batch_size")?;
            let caches = a.cache.clone().map(OneOrMany::into_vec).unwrap_or_else(|| vec![false]);
            caches
                .into_iter()
                .map(|cache| AlgoConfig {
                    batch_size: batch,
                    ..AlgoConfig::bubblesort(k, cache)
                })
                .collect()
        }
        Algorithm::Quicksort => {
            let pivots = a
                .pivot
                .clone()
                .map(OneOrMany::into_vec)
                .unwrap_or_else(|| vec!["first".to_string()]);
            let batches = a.batch_size.clone().map(OneOrMany::into_vec).unwrap_or_else(|| vec![1]);
            let partials = a.partial.clone().map(OneOrMany::into_vec).unwrap_or_else(|| vec![true]);
            let cache = single(&a.cache, false, "cache")?;
            let pivot_seed = a.pivot_seed.unwrap_or(master_seed);
            let mut out = Vec::new();
            for p in &pivots {
                let pivot = PivotStrategy::parse(p, pivot_seed)?;
                for &b in &batches {
                    for &partial in &partials {
                        let mut c = AlgoConfig::quicksort(k, pivot, b, partial);
                        c.use_cache = cache;
                        out.push(c);
                    }
                }
            }
            out
        }
    };
    for c in &out {
        c.validate()?;
    }
    Ok(out)
}

fn single<T: Copy>(v: &Option<OneOrMany<T>>, default: T, field: &str) -> Result<T, HarnessError> {
    match v {
        None => Ok(default),
        Some(OneOrMany::One(x)) => Ok(*x),
        Some(OneOrMany::Many(xs)) if xs.len() == 1 => Ok(xs[0]),
        Some(OneOrMany::Many(_)) => Err(invalid(format!("`{field}` takes a single value here"))),
    }
}
