//! Subgraph containment via VF2-style backtracking.

use crate::graph::Graph;

/// Matching semantics for [`is_subgraph_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Semantics {
    /// Monotone containment: every query edge must map onto a corpus edge.
    #[default]
    NonInduced,
    /// Additionally, every query non-edge must map onto a corpus non-edge.
    Induced,
}

/// True iff there is an injective node map `f: V_q -> V_c` carrying every
/// query edge onto a corpus edge (non-induced containment).
pub fn is_subgraph(query: &Graph, corpus: &Graph) -> bool {
    is_subgraph_with(query, corpus, Semantics::NonInduced)
}

/// Containment check under the chosen semantics.
pub fn is_subgraph_with(query: &Graph, corpus: &Graph, semantics: Semantics) -> bool {
    let nq = query.node_count();
    let nc = corpus.node_count();
    if nq > nc {
        return false;
    }
    if semantics == Semantics::NonInduced && query.edge_count() > corpus.edge_count() {
        return false;
    }
    if nq == 0 {
        return true;
    }

    let state = SearchState {
        q_nbrs: query.neighbor_lists(),
        c_nbrs: corpus.neighbor_lists(),
        c_adj: corpus.adjacency(),
        order: match_order(query),
        semantics,
        nc,
    };
    let mut mapping = vec![usize::MAX; nq];
    let mut used = vec![false; nc];
    state.extend(0, &mut mapping, &mut used)
}

struct SearchState {
    q_nbrs: Vec<Vec<usize>>,
    c_nbrs: Vec<Vec<usize>>,
    c_adj: Vec<Vec<u8>>,
    order: Vec<usize>,
    semantics: Semantics,
    nc: usize,
}

/// Query nodes ordered so that each one (where possible) has an already-placed
/// neighbor: highest degree first, then BFS layers. Connected candidates can
/// then be drawn from the mapped neighbor's image instead of all of V_c.
fn match_order(query: &Graph) -> Vec<usize> {
    let n = query.node_count();
    let nbrs = query.neighbor_lists();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&u| std::cmp::Reverse(nbrs[u].len()));

    for &root in &by_degree {
        if placed[root] {
            continue;
        }
        let mut queue = std::collections::VecDeque::new();
        placed[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            // Expand by descending degree for earlier pruning.
            let mut next: Vec<usize> = nbrs[u].iter().cloned().filter(|&v| !placed[v]).collect();
            next.sort_by_key(|&v| std::cmp::Reverse(nbrs[v].len()));
            for v in next {
                placed[v] = true;
                queue.push_back(v);
            }
        }
    }
    order
}

impl SearchState {
    fn extend(&self, depth: usize, mapping: &mut [usize], used: &mut [bool]) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let u = self.order[depth];
        let mapped_nbr = self.q_nbrs[u].iter().find(|&&v| mapping[v] != usize::MAX);

        // Candidates: neighbors of an already-mapped query neighbor's image,
        // or every unused corpus node when u starts a new component.
        let candidates: Vec<usize> = match mapped_nbr {
            Some(&v) => self.c_nbrs[mapping[v]]
                .iter()
                .cloned()
                .filter(|&c| !used[c])
                .collect(),
            None => (0..self.nc).filter(|&c| !used[c]).collect(),
        };

        'cand: for cand in candidates {
            if self.q_nbrs[u].len() > self.c_nbrs[cand].len() {
                continue;
            }
            for &v in &self.q_nbrs[u] {
                let img = mapping[v];
                if img != usize::MAX && self.c_adj[cand][img] == 0 {
                    continue 'cand;
                }
            }
            if self.semantics == Semantics::Induced {
                // Mapped non-neighbors of u must not be adjacent to cand.
                for (v, &img) in mapping.iter().enumerate() {
                    if img != usize::MAX
                        && !self.q_nbrs[u].contains(&v)
                        && self.c_adj[cand][img] == 1
                    {
                        continue 'cand;
                    }
                }
            }
            mapping[u] = cand;
            used[cand] = true;
            if self.extend(depth + 1, mapping, used) {
                return true;
            }
            mapping[u] = usize::MAX;
            used[cand] = false;
        }
        false
    }
}

/// Exhaustive oracle: tries every injective map. Exponential; only for
/// small graphs in tests and cross-checks.
pub fn is_subgraph_brute_force(query: &Graph, corpus: &Graph) -> bool {
    let nq = query.node_count();
    let nc = corpus.node_count();
    if nq > nc {
        return false;
    }
    let mut mapping = vec![usize::MAX; nq];
    let mut used = vec![false; nc];
    fn rec(
        depth: usize,
        query: &Graph,
        corpus: &Graph,
        mapping: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if depth == mapping.len() {
            return query
                .edges()
                .iter()
                .all(|&(u, v)| corpus.has_edge(mapping[u], mapping[v]));
        }
        for c in 0..used.len() {
            if used[c] {
                continue;
            }
            mapping[depth] = c;
            used[c] = true;
            if rec(depth + 1, query, corpus, mapping, used) {
                return true;
            }
            used[c] = false;
        }
        false
    }
    rec(0, query, corpus, &mut mapping, &mut used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn path(n: usize) -> Graph {
        Graph::new(n, (0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_edge_into_triangle() {
        let e = Graph::new(2, vec![(0, 1)]).unwrap();
        assert!(is_subgraph(&e, &triangle()));
    }

    #[test]
    fn triangle_not_in_path() {
        assert!(!is_subgraph(&triangle(), &path(3)));
    }

    #[test]
    fn every_graph_contains_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.gen_range(1..8);
            let g = Graph::erdos_renyi(n, 0.4, &mut rng).unwrap();
            assert!(is_subgraph(&g, &g));
            assert!(is_subgraph_with(&g, &g, Semantics::Induced));
        }
    }

    #[test]
    fn invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let q = Graph::erdos_renyi(rng.gen_range(2..6), 0.5, &mut rng).unwrap();
            let c = Graph::erdos_renyi(rng.gen_range(2..8), 0.5, &mut rng).unwrap();
            let mut pq: Vec<usize> = (0..q.node_count()).collect();
            let mut pc: Vec<usize> = (0..c.node_count()).collect();
            for i in (1..pq.len()).rev() {
                pq.swap(i, rng.gen_range(0..=i));
            }
            for i in (1..pc.len()).rev() {
                pc.swap(i, rng.gen_range(0..=i));
            }
            let q2 = q.relabel(&pq).unwrap();
            let c2 = c.relabel(&pc).unwrap();
            assert_eq!(is_subgraph(&q, &c), is_subgraph(&q2, &c2));
        }
    }

    #[test]
    fn agrees_with_brute_force_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1704);
        let mut positives = 0;
        for _ in 0..200 {
            let nq = rng.gen_range(1..=6);
            let nc = rng.gen_range(nq..=8);
            let q = Graph::erdos_renyi(nq, rng.gen_range(0.2..0.7), &mut rng).unwrap();
            let c = Graph::erdos_renyi(nc, rng.gen_range(0.2..0.8), &mut rng).unwrap();
            let fast = is_subgraph(&q, &c);
            let slow = is_subgraph_brute_force(&q, &c);
            assert_eq!(fast, slow, "q={:?} c={:?}", q.edges(), c.edges());
            positives += fast as usize;
        }
        // Sanity: the sample exercises both outcomes.
        assert!(positives > 10 && positives < 190, "positives = {positives}");
    }

    #[test]
    fn induced_is_stricter() {
        // A path of 3 embeds in a triangle monotonically but not induced.
        let p = path(3);
        let t = triangle();
        assert!(is_subgraph_with(&p, &t, Semantics::NonInduced));
        assert!(!is_subgraph_with(&p, &t, Semantics::Induced));
    }

    #[test]
    fn disconnected_query() {
        // Two isolated edges embed into a 4-cycle.
        let q = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let c = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert!(is_subgraph(&q, &c));
    }
}
