//! Exact combinatorial references: brute-force QAP distance over adjacency
//! matrices and Hungarian-solved linear assignment over embedding sets.

use ndarray::Array2;

use crate::error::{MatchError, Result};
use crate::graph::{pad_pair, Graph};
use crate::tape::Mat;

/// Largest padded size accepted by [`exact_qap_distance`]; N! permutations.
pub const QAP_MAX_NODES: usize = 9;

/// Minimum over all node permutations P of the hinge mass of
/// `A_q - P A_c P^T`, counting both symmetric entries of each edge.
///
/// Zero exactly when the query is contained in the corpus. Factorial cost,
/// guarded at N = 9; use the containment search for anything larger.
pub fn exact_qap_distance(query: &Graph, corpus: &Graph) -> Result<u64> {
    let pair = pad_pair(query, corpus);
    let n = pair.node_count;
    if n > QAP_MAX_NODES {
        return Err(MatchError::SizeGuard(format!(
            "exact_qap_distance is limited to {QAP_MAX_NODES} padded nodes (got {n}); \
             use is_subgraph for containment checks at larger sizes"
        )));
    }
    let aq = pair.query.adjacency();
    let ac = pair.corpus.adjacency();

    // perm[u] = corpus node that query slot u is matched to.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    permute(&mut perm, 0, &mut |p| {
        let mut cost = 0u64;
        for u in 0..n {
            for v in 0..n {
                if aq[u][v] == 1 && ac[p[u]][p[v]] == 0 {
                    cost += 1;
                }
            }
        }
        best = best.min(cost);
    });
    Ok(best)
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Hinge cost of aligning row `u` of `xq` to row `v` of `xc`:
/// `sum_i [xq[u,i] - xc[v,i]]_+`.
pub fn hinge_cost_matrix(xq: &Mat, xc: &Mat) -> Result<Mat> {
    if xq.ncols() != xc.ncols() || xq.nrows() != xc.nrows() {
        return Err(MatchError::Dimension {
            op: "hinge_cost_matrix",
            lhs: xq.dim(),
            rhs: xc.dim(),
        });
    }
    let n = xq.nrows();
    Ok(Array2::from_shape_fn((n, n), |(u, v)| {
        xq.row(u)
            .iter()
            .zip(xc.row(v))
            .map(|(a, b)| (a - b).max(0.0))
            .sum()
    }))
}

/// Minimum over hard permutations P of `sum [Xq - P Xc]_+`, solved exactly by
/// the Hungarian algorithm on the pairwise hinge cost matrix.
pub fn exact_lap_distance(xq: &Mat, xc: &Mat) -> Result<f64> {
    let cost = hinge_cost_matrix(xq, xc)?;
    let (total, _) = hungarian(&cost);
    Ok(total)
}

/// As [`exact_lap_distance`] but also returns the assignment `row -> col`.
pub fn exact_lap_assignment(xq: &Mat, xc: &Mat) -> Result<(f64, Vec<usize>)> {
    let cost = hinge_cost_matrix(xq, xc)?;
    Ok(hungarian(&cost))
}

/// O(n^3) Hungarian method (shortest augmenting path form) for a square cost
/// matrix. Returns the minimum total cost and the assignment `row -> col`.
pub fn hungarian(cost: &Mat) -> (f64, Vec<usize>) {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "hungarian needs a square cost matrix");
    if n == 0 {
        return (0.0, Vec::new());
    }
    // Potentials and matching are kept 1-indexed with a virtual 0 slot.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut match_of_col = vec![0usize; n + 1]; // row matched to each column

    for i in 1..=n {
        match_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[match_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_of_col[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        loop {
            let j1 = way[j0];
            match_of_col[j0] = match_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        let i = match_of_col[j];
        assignment[i - 1] = j - 1;
        total += cost[(i - 1, j - 1)];
    }
    (total, assignment)
}

/// Minimum assignment cost by explicit enumeration of all permutations.
/// Factorial; oracle for tests.
pub fn lap_brute_force(cost: &Mat) -> f64 {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols());
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        best = best.min(total);
    });
    best
}
