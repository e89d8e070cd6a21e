//! Sweeps every (dataset, algorithm, query) cell and aggregates the ledgers.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{self, AlgoConfig, Algorithm, PivotStrategy};
use crate::metrics::{aggregate, ndcg_at_k, percent_gain, CostStats};
use crate::model::DocId;
use crate::oracle::{LlmClient, LlmOracle, Oracle, OracleError};
use crate::seed;

use super::config::{DatasetSource, DatasetSpec, ExperimentConfig, OracleSpec, Pooling};
use super::{synth, trec, Dataset, HarnessError, Query};

/// Dataset name of the cross-dataset rows.
pub const POOLED_DATASET: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub dataset: String,
    pub query_id: String,
    pub label: String,
    pub algorithm: Algorithm,
    pub k: usize,
    pub batch_size: usize,
    /// Quicksort only.
    pub pivot: Option<String>,
    pub cached: bool,
    pub partial: bool,
    /// Candidates ranked.
    pub n: usize,
    pub comparisons: u64,
    pub inference_calls: u64,
    pub cache_hits: u64,
    pub batch_groups: u64,
    pub ndcg: Option<f64>,
    /// Set when the cell failed; counts are then zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    /// Set on cross-dataset rows only.
    pub pooling: Option<Pooling>,
    pub label: String,
    pub algorithm: Algorithm,
    pub k: usize,
    pub batch_size: usize,
    pub pivot: Option<String>,
    pub cached: bool,
    pub partial: bool,
    /// Successful queries (or datasets, for `datasets` pooling).
    pub queries: usize,
    pub failures: usize,
    pub comparisons_mean: f64,
    pub comparisons_sd: f64,
    pub inference_calls_mean: f64,
    pub inference_calls_sd: f64,
    pub cache_hits_mean: f64,
    pub ndcg_mean: Option<f64>,
    /// Inference-call saving against heapsort with the same k.
    pub gain_vs_heapsort: Option<f64>,
    /// Cached bubblesort's inference-call saving against the classic variant.
    pub gain_vs_uncached: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub queries: Vec<QueryRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn pivot_name(c: &AlgoConfig) -> Option<String> {
    (c.algorithm == Algorithm::Quicksort).then(|| c.pivot.name().to_string())
}

/// Seed for one query: a pure function of the base seed, the dataset name and
/// the query id, so reordering or adding queries leaves other rows alone.
fn query_seed(base: u64, dataset: &str, query: &str) -> u64 {
    seed::derive(base, &[seed::fnv1a(dataset.as_bytes()), seed::fnv1a(query.as_bytes())])
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset, HarnessError> {
    match &spec.source {
        DatasetSource::Synthetic { num_queries, n, seed } => {
            let mut d = synth::generate_synthetic(*num_queries, *n, *seed)?;
            d.name = spec.name.clone();
            Ok(d)
        }
        DatasetSource::Trec {
            run,
            qrels,
            queries,
            corpus,
            scores,
            depth,
        } => {
            let lists = trec::load_run_file(run, *depth)?;
            let grades = qrels.as_deref().map(trec::load_qrels).transpose()?;
            let query_text = queries.as_deref().map(trec::load_tsv_texts).transpose()?;
            let passages = corpus.as_deref().map(trec::load_tsv_texts).transpose()?;
            let mut truth = scores.as_deref().map(trec::load_scores).transpose()?;
            let queries = lists
                .into_iter()
                .map(|(id, mut candidates)| {
                    if let Some(p) = &passages {
                        for c in &mut candidates {
                            c.text = p.get(c.doc.as_str()).cloned();
                        }
                    }
                    Query {
                        text: query_text.as_ref().and_then(|t| t.get(&id).cloned()),
                        scores: truth.as_mut().map(|t| t.remove(&id).unwrap_or_default()),
                        id,
                        candidates,
                    }
                })
                .collect();
            Ok(Dataset {
                name: spec.name.clone(),
                queries,
                grades,
            })
        }
    }
}

/// Ground truth for simulated judges: explicit scores when present, otherwise
/// the qrels grades (unjudged documents score 0).
fn truth_scores(dataset: &Dataset, q: &Query) -> Result<HashMap<DocId, f64>, OracleError> {
    if let Some(s) = &q.scores {
        return Ok(s.clone());
    }
    match &dataset.grades {
        Some(g) => Ok(q
            .candidates
            .iter()
            .map(|c| (c.doc.clone(), g.grade(&q.id, &c.doc) as f64))
            .collect()),
        None => Err(OracleError::InvalidConfig(format!(
            "query {}: simulated judge needs a scores file or qrels",
            q.id
        ))),
    }
}

fn build_oracle(
    spec: &OracleSpec,
    client: Option<&Arc<LlmClient>>,
    dataset: &Dataset,
    q: &Query,
) -> Result<Oracle, OracleError> {
    match spec {
        OracleSpec::Score => Oracle::score(truth_scores(dataset, q)?),
        OracleSpec::Noisy {
            flip_probability,
            seed,
            per_event,
        } => {
            let base = Oracle::score(truth_scores(dataset, q)?)?;
            let noisy = crate::oracle::NoisyOracle::new(base, *flip_probability, query_seed(*seed, &dataset.name, &q.id))?
                .per_event(*per_event);
            Ok(Oracle::Noisy(noisy))
        }
        OracleSpec::Llm(_) => {
            let client = client.ok_or_else(|| OracleError::InvalidConfig("llm client not initialised".into()))?;
            let text = q
                .text
                .as_deref()
                .ok_or_else(|| OracleError::InvalidConfig(format!("query {} has no text", q.id)))?;
            Ok(Oracle::Llm(LlmOracle::new(Arc::clone(client), text, &q.candidates)?))
        }
    }
}

fn run_cell(
    config: &ExperimentConfig,
    client: Option<&Arc<LlmClient>>,
    dataset: &Dataset,
    algo: &AlgoConfig,
    q: &Query,
) -> QueryRow {
    let mut row = QueryRow {
        dataset: dataset.name.clone(),
        query_id: q.id.clone(),
        label: algo.label(),
        algorithm: algo.algorithm,
        k: algo.k,
        batch_size: algo.batch_size,
        pivot: pivot_name(algo),
        cached: algo.use_cache,
        partial: algo.partial,
        n: q.candidates.len(),
        comparisons: 0,
        inference_calls: 0,
        cache_hits: 0,
        batch_groups: 0,
        ndcg: None,
        error: None,
    };
    let mut cell = *algo;
    if let PivotStrategy::Random { seed } = cell.pivot {
        cell.pivot = PivotStrategy::Random {
            seed: query_seed(seed, &dataset.name, &q.id),
        };
    }
    let outcome = build_oracle(&config.oracle, client, dataset, q)
        .map_err(HarnessError::from)
        .and_then(|oracle| algorithms::run(&cell, &q.doc_ids(), oracle, false).map_err(HarnessError::from));
    match outcome {
        Ok(out) => {
            row.comparisons = out.ledger.comparisons;
            row.inference_calls = out.ledger.inference_calls;
            row.cache_hits = out.ledger.cache_hits;
            row.batch_groups = out.ledger.batch_groups;
            row.ndcg = dataset
                .grades
                .as_ref()
                .map(|g| ndcg_at_k(&out.ranking.ordered, g, &q.id, config.ndcg_k));
        }
        Err(e) => {
            log::warn!("{} / {} / {}: {e}", dataset.name, row.label, q.id);
            row.error = Some(e.to_string());
        }
    }
    row
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let datasets = config
        .datasets
        .iter()
        .map(load_dataset)
        .collect::<Result<Vec<_>, _>>()?;
    let client = match &config.oracle {
        OracleSpec::Llm(ep) => Some(Arc::new(LlmClient::new(ep.clone())?)),
        _ => None,
    };

    let mut cells = Vec::new();
    for d in &datasets {
        for a in &config.algorithms {
            for q in &d.queries {
                cells.push((d, a, q));
            }
        }
    }
    let queries: Vec<QueryRow> = cells
        .par_iter()
        .map(|(d, a, q)| run_cell(config, client.as_ref(), d, a, q))
        .collect();

    let aggregates = aggregate_rows(&queries, config.pooling)?;
    Ok(ExperimentReport { queries, aggregates })
}

type ConfigKey = (String, Algorithm, usize, usize, Option<String>, bool, bool);

fn config_key(r: &QueryRow) -> ConfigKey {
    (r.label.clone(), r.algorithm, r.k, r.batch_size, r.pivot.clone(), r.cached, r.partial)
}

fn stats(values: &[f64]) -> CostStats {
    aggregate(values).unwrap_or(CostStats { mean: 0.0, sd: 0.0, n: 0 })
}

fn mean_of(values: &[f64]) -> Option<f64> {
    aggregate(values).ok().map(|s| s.mean)
}

fn summarize(dataset: &str, key: &ConfigKey, rows: &[&QueryRow]) -> AggregateRow {
    let ok: Vec<&&QueryRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let col = |f: fn(&QueryRow) -> u64| ok.iter().map(|r| f(r) as f64).collect::<Vec<_>>();
    let comps = stats(&col(|r| r.comparisons));
    let calls = stats(&col(|r| r.inference_calls));
    let ndcgs: Vec<f64> = ok.iter().filter_map(|r| r.ndcg).collect();
    let (label, algorithm, k, batch_size, pivot, cached, partial) = key.clone();
    AggregateRow {
        dataset: dataset.to_string(),
        pooling: None,
        label,
        algorithm,
        k,
        batch_size,
        pivot,
        cached,
        partial,
        queries: ok.len(),
        failures: rows.len() - ok.len(),
        comparisons_mean: comps.mean,
        comparisons_sd: comps.sd,
        inference_calls_mean: calls.mean,
        inference_calls_sd: calls.sd,
        cache_hits_mean: stats(&col(|r| r.cache_hits)).mean,
        ndcg_mean: if ndcgs.len() == ok.len() { mean_of(&ndcgs) } else { None },
        gain_vs_heapsort: None,
        gain_vs_uncached: None,
    }
}

/// Per-dataset rows in first-appearance order, then cross-dataset rows when
/// more than one dataset is present. Gains are filled in last.
pub(crate) fn aggregate_rows(rows: &[QueryRow], pooling: Pooling) -> Result<Vec<AggregateRow>, HarnessError> {
    let mut order: Vec<(String, ConfigKey)> = Vec::new();
    let mut groups: HashMap<(String, ConfigKey), Vec<&QueryRow>> = HashMap::new();
    let mut datasets: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        let key = (r.dataset.clone(), config_key(r));
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    let mut out: Vec<AggregateRow> = order
        .iter()
        .map(|(d, key)| summarize(d, key, &groups[&(d.clone(), key.clone())]))
        .collect();

    if datasets.len() > 1 {
        let mut keys: Vec<ConfigKey> = Vec::new();
        for (_, key) in &order {
            if !keys.contains(key) {
                keys.push(key.clone());
            }
        }
        for key in keys {
            let pooled = match pooling {
                Pooling::Queries => {
                    let members: Vec<&QueryRow> = rows.iter().filter(|r| config_key(r) == key).collect();
                    summarize(POOLED_DATASET, &key, &members)
                }
                Pooling::Datasets => pool_means(&out, &key),
            };
            out.push(AggregateRow {
                pooling: Some(pooling),
                ..pooled
            });
        }
    }
    fill_gains(&mut out);
    Ok(out)
}

/// Mean of per-dataset means; datasets without a successful query are skipped.
fn pool_means(per_dataset: &[AggregateRow], key: &ConfigKey) -> AggregateRow {
    let members: Vec<&AggregateRow> = per_dataset
        .iter()
        .filter(|a| a.pooling.is_none() && agg_key(a) == *key)
        .collect();
    let live: Vec<&&AggregateRow> = members.iter().filter(|a| a.queries > 0).collect();
    let col = |f: fn(&AggregateRow) -> f64| live.iter().map(|a| f(a)).collect::<Vec<_>>();
    let comps = stats(&col(|a| a.comparisons_mean));
    let calls = stats(&col(|a| a.inference_calls_mean));
    let ndcgs: Vec<f64> = live.iter().filter_map(|a| a.ndcg_mean).collect();
    let (label, algorithm, k, batch_size, pivot, cached, partial) = key.clone();
    AggregateRow {
        dataset: POOLED_DATASET.to_string(),
        pooling: Some(Pooling::Datasets),
        label,
        algorithm,
        k,
        batch_size,
        pivot,
        cached,
        partial,
        queries: live.len(),
        failures: members.iter().map(|a| a.failures).sum(),
        comparisons_mean: comps.mean,
        comparisons_sd: comps.sd,
        inference_calls_mean: calls.mean,
        inference_calls_sd: calls.sd,
        cache_hits_mean: stats(&col(|a| a.cache_hits_mean)).mean,
        ndcg_mean: if ndcgs.len() == live.len() { mean_of(&ndcgs) } else { None },
        gain_vs_heapsort: None,
        gain_vs_uncached: None,
    }
}

pub(crate) fn agg_key(a: &AggregateRow) -> ConfigKey {
    (a.label.clone(), a.algorithm, a.k, a.batch_size, a.pivot.clone(), a.cached, a.partial)
}

pub(crate) fn fill_gains(rows: &mut [AggregateRow]) {
    let baseline = |rows: &[AggregateRow], dataset: &str, k: usize, want: fn(&AggregateRow) -> bool| {
        rows.iter()
            .find(|b| b.dataset == dataset && b.k == k && b.queries > 0 && want(b))
            .map(|b| b.inference_calls_mean)
    };
    for i in 0..rows.len() {
        let r = &rows[i];
        if r.queries == 0 {
            continue;
        }
        let heap = if r.algorithm == Algorithm::Heapsort {
            None
        } else {
            baseline(rows, &r.dataset, r.k, |b| b.algorithm == Algorithm::Heapsort)
        };
        let classic = if r.algorithm == Algorithm::Bubblesort && r.cached {
            baseline(rows, &r.dataset, r.k, |b| b.algorithm == Algorithm::Bubblesort && !b.cached)
        } else {
            None
        };
        let calls = r.inference_calls_mean;
        rows[i].gain_vs_heapsort = heap.and_then(|b| percent_gain(b, calls).ok());
        rows[i].gain_vs_uncached = classic.and_then(|b| percent_gain(b, calls).ok());
    }
}
