//! Undirected simple graphs with padding for pairwise matching.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};

/// Undirected simple graph. Edges are canonicalized to `(u, v)` with `u < v`
/// and kept in sorted order; the adjacency matrix mirrors them exactly.
/// Node features are the constant scalar `1.0` unless overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    node_features: Vec<f64>,
}

impl Graph {
    /// Build from an edge list; duplicate edges and self-loops are dropped.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(MatchError::Usage(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                continue;
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Graph {
            node_count,
            edges: canon,
            node_features: vec![1.0; node_count],
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonicalized `(u, v)` pairs with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_features(&self) -> &[f64] {
        &self.node_features
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).is_ok()
    }

    /// Symmetric 0/1 adjacency matrix with a zero diagonal.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.node_count]; self.node_count];
        for &(u, v) in &self.edges {
            a[u][v] = 1;
            a[v][u] = 1;
        }
        a
    }

    /// Neighbor lists in ascending node order.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            nbrs[u].push(v);
            nbrs[v].push(u);
        }
        for list in &mut nbrs {
            list.sort_unstable();
        }
        nbrs
    }

    pub fn degree(&self, u: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == u || b == u)
            .count()
    }

    /// Induced subgraph on `nodes`, relabeled 0..len in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut position = vec![usize::MAX; self.node_count];
        for (i, &n) in nodes.iter().enumerate() {
            if n >= self.node_count {
                return Err(MatchError::Usage(format!("node {n} out of range")));
            }
            position[n] = i;
        }
        let edges = self.edges.iter().filter_map(|&(u, v)| {
            let (pu, pv) = (position[u], position[v]);
            (pu != usize::MAX && pv != usize::MAX).then_some((pu, pv))
        });
        Graph::new(nodes.len(), edges.collect::<Vec<_>>())
    }

    /// Apply a node relabeling: node `u` becomes `perm[u]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.node_count {
            return Err(MatchError::Usage("permutation length mismatch".into()));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Graph::new(self.node_count, edges)
    }

    /// Erdos-Renyi G(n, p) sample.
    pub fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_range(0.0..1.0) < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(n, edges)
    }

    /// Breadth-first traversal from `start`, visiting neighbors in ascending
    /// order, stopping once `limit` nodes are collected (or the component is
    /// exhausted). Returns nodes in visit order.
    pub fn bfs_nodes(&self, start: usize, limit: usize) -> Vec<usize> {
        let nbrs = self.neighbor_lists();
        let mut seen = vec![false; self.node_count];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            if order.len() >= limit {
                break;
            }
            for &v in &nbrs[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        order
    }
}

/// A collection of graphs from one source (parsed file or generator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCollection {
    pub graphs: Vec<Graph>,
}

/// A query/corpus pair padded with isolated nodes to a common node count and
/// a common edge-slot count. Padded edge slots carry no endpoints; real edges
/// occupy the leading slots.
#[derive(Debug, Clone)]
pub struct PaddedPair {
    pub query: Graph,
    pub corpus: Graph,
    /// Common node count after padding.
    pub node_count: usize,
    /// Common edge-slot count: max of the two real edge counts.
    pub edge_slots: usize,
    /// True for real (non-pad) nodes, per graph.
    pub query_node_mask: Vec<bool>,
    pub corpus_node_mask: Vec<bool>,
    /// True for real (non-pad) edge slots, per graph.
    pub query_edge_mask: Vec<bool>,
    pub corpus_edge_mask: Vec<bool>,
}

/// Pad both graphs with isolated nodes to their pairwise maximum size.
pub fn pad_pair(query: &Graph, corpus: &Graph) -> PaddedPair {
    let n = query.node_count().max(corpus.node_count());
    let slots = query.edge_count().max(corpus.edge_count());
    let pad = |g: &Graph| -> Graph {
        Graph::new(n, g.edges().to_vec()).expect("padding preserves validity")
    };
    let mask = |real: usize, total: usize| -> Vec<bool> {
        (0..total).map(|i| i < real).collect()
    };
    PaddedPair {
        query_node_mask: mask(query.node_count(), n),
        corpus_node_mask: mask(corpus.node_count(), n),
        query_edge_mask: mask(query.edge_count(), slots),
        corpus_edge_mask: mask(corpus.edge_count(), slots),
        query: pad(query),
        corpus: pad(corpus),
        node_count: n,
        edge_slots: slots,
    }
}
