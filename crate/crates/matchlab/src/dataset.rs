//! Query/corpus retrieval datasets with exact containment labels.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};
use crate::graph::{Graph, GraphCollection};
use crate::isomorphism::{is_subgraph_with, Semantics};

/// Disjoint query-index splits. Proportions are 60:15:25 by count with
/// rounding toward train.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Split `0..n` sequentially: val and test take their floored shares,
    /// train absorbs the remainder.
    pub fn sequential(n: usize) -> Splits {
        let val = n * 15 / 100;
        let test = n * 25 / 100;
        let train = n - val - test;
        Splits {
            train: (0..train).collect(),
            val: (train..train + val).collect(),
            test: (train + val..n).collect(),
        }
    }
}

/// Queries, corpus, binary relevance labels, and query splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalDataset {
    pub queries: Vec<Graph>,
    pub corpus: Vec<Graph>,
    /// `relevance[q][c] = 1` iff `queries[q]` is contained in `corpus[c]`.
    pub relevance: Vec<Vec<u8>>,
    pub splits: Splits,
    /// Matching semantics the labels were computed under.
    #[serde(default)]
    pub induced: bool,
    /// Seed used during sampling, recorded for provenance.
    #[serde(default)]
    pub seed: u64,
}

impl RetrievalDataset {
    pub fn positive_fraction(&self) -> f64 {
        let total = self.queries.len() * self.corpus.len();
        if total == 0 {
            return 0.0;
        }
        let positives: usize = self
            .relevance
            .iter()
            .map(|row| row.iter().filter(|&&r| r == 1).count())
            .sum();
        positives as f64 / total as f64
    }

    /// Corpus indices relevant to query `q`.
    pub fn positives_of(&self, q: usize) -> Vec<usize> {
        (0..self.corpus.len())
            .filter(|&c| self.relevance[q][c] == 1)
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| MatchError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MatchError::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Knobs for [`sample_query_corpus`].
#[derive(Debug, Clone, Copy)]
pub struct SampleConfig {
    pub n_queries: usize,
    pub n_corpus: usize,
    pub max_query_nodes: usize,
    pub max_corpus_nodes: usize,
    pub seed: u64,
    pub semantics: Semantics,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n_queries: 300,
            n_corpus: 800,
            max_query_nodes: 15,
            max_corpus_nodes: 20,
            seed: 1704,
            semantics: Semantics::NonInduced,
        }
    }
}

const RESAMPLE_BUDGET_PER_GRAPH: usize = 1000;

/// Sample query and corpus graphs from a source collection by BFS walks, then
/// label every pair with exact containment.
///
/// Each sample draws a target size uniformly from `[3, cap]`, a source graph
/// and a start node uniformly, walks BFS until the target size (or the whole
/// component, if smaller), and emits the induced subgraph in visit order.
/// Source graphs with fewer than 3 nodes are skipped with a resample.
/// Deterministic for a fixed seed; relevance labels are computed in parallel.
pub fn sample_query_corpus(
    source: &GraphCollection,
    config: &SampleConfig,
) -> Result<RetrievalDataset> {
    if source.graphs.is_empty() {
        return Err(MatchError::Sampling("source collection is empty".into()));
    }
    if config.max_query_nodes < 1 || config.max_corpus_nodes < 1 {
        return Err(MatchError::Config("size caps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let queries = sample_many(source, config.n_queries, config.max_query_nodes, &mut rng)?;
    let corpus = sample_many(source, config.n_corpus, config.max_corpus_nodes, &mut rng)?;

    let relevance: Vec<Vec<u8>> = queries
        .par_iter()
        .map(|q| {
            corpus
                .iter()
                .map(|c| is_subgraph_with(q, c, config.semantics) as u8)
                .collect()
        })
        .collect();

    Ok(RetrievalDataset {
        splits: Splits::sequential(queries.len()),
        queries,
        corpus,
        relevance,
        induced: config.semantics == Semantics::Induced,
        seed: config.seed,
    })
}

fn sample_many(
    source: &GraphCollection,
    count: usize,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Graph>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(sample_one(source, cap, rng)?);
    }
    Ok(out)
}

fn sample_one(source: &GraphCollection, cap: usize, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let lo = 3.min(cap);
    for _ in 0..RESAMPLE_BUDGET_PER_GRAPH {
        let g = &source.graphs[rng.gen_range(0..source.graphs.len())];
        if g.node_count() < 3 {
            continue;
        }
        let target = rng.gen_range(lo..=cap);
        let start = rng.gen_range(0..g.node_count());
        let nodes = g.bfs_nodes(start, target);
        return g.induced_subgraph(&nodes);
    }
    Err(MatchError::Sampling(format!(
        "no source graph with at least 3 nodes found in {RESAMPLE_BUDGET_PER_GRAPH} attempts"
    )))
}

/// Generate an Erdos-Renyi source pool for synthetic datasets.
pub fn synthetic_source(n_graphs: usize, nodes: usize, edge_prob: f64, seed: u64) -> Result<GraphCollection> {
    if nodes == 0 || !(0.0..=1.0).contains(&edge_prob) {
        return Err(MatchError::Config(format!(
            "invalid synthetic source: {nodes} nodes, edge probability {edge_prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_50_u64);
    let graphs = (0..n_graphs)
        .map(|_| Graph::erdos_renyi(nodes, edge_prob, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphCollection { graphs })
}
