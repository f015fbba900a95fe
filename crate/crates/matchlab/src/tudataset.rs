//! Parser for the TUDataset plain-text graph collection format.
//!
//! A dataset directory `<dir>` holds `<DS>_A.txt` (comma-separated 1-indexed
//! edge endpoints, one edge per line) and `<DS>_graph_indicator.txt`
//! (1-indexed graph id of each node, one per line). The dataset name `<DS>`
//! is discovered from the `_A.txt` file present in the directory.

use std::path::{Path, PathBuf};

use crate::error::{MatchError, Result};
use crate::graph::{Graph, GraphCollection};

/// Parse a TUDataset directory into one [`Graph`] per graph id.
///
/// Node ids are renumbered 0-based per graph, duplicate edges and self-loops
/// are dropped, and node features are set to the scalar `1.0`.
pub fn parse_tudataset(dir: &Path) -> Result<GraphCollection> {
    let (a_path, indicator_path) = locate_files(dir)?;

    let indicator_text = std::fs::read_to_string(&indicator_path)
        .map_err(|e| MatchError::io(indicator_path.display().to_string(), e))?;

    // graph_of[i] = 0-based graph id of 0-based node i
    let mut graph_of: Vec<usize> = Vec::new();
    let mut n_graphs = 0usize;
    for (lineno, line) in indicator_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let gid: usize = line.parse().map_err(|_| MatchError::MalformedDataset {
            message: format!("bad graph id {line:?} in {}", indicator_path.display()),
            line: lineno + 1,
        })?;
        if gid == 0 {
            return Err(MatchError::MalformedDataset {
                message: "graph ids are 1-indexed; found 0".into(),
                line: lineno + 1,
            });
        }
        graph_of.push(gid - 1);
        n_graphs = n_graphs.max(gid);
    }

    // Local (within-graph) index of each node, assigned in file order.
    let mut local_index = vec![0usize; graph_of.len()];
    let mut sizes = vec![0usize; n_graphs];
    for (node, &g) in graph_of.iter().enumerate() {
        local_index[node] = sizes[g];
        sizes[g] += 1;
    }

    let a_text = std::fs::read_to_string(&a_path)
        .map_err(|e| MatchError::io(a_path.display().to_string(), e))?;
    let mut edges: Vec<Vec<(usize, usize)>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (lineno, line) in a_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (u, v) = match (parts.next(), parts.next()) {
            (Some(u), Some(v)) => (u, v),
            _ => {
                return Err(MatchError::MalformedDataset {
                    message: format!("expected \"u, v\" in {}", a_path.display()),
                    line: lineno + 1,
                })
            }
        };
        let parse_endpoint = |s: &str| -> Result<usize> {
            let id: usize = s.parse().map_err(|_| MatchError::MalformedDataset {
                message: format!("bad node id {s:?} in {}", a_path.display()),
                line: lineno + 1,
            })?;
            if id == 0 || id > graph_of.len() {
                return Err(MatchError::MalformedDataset {
                    message: format!(
                        "edge endpoint {id} references unknown node (dataset has {} nodes)",
                        graph_of.len()
                    ),
                    line: lineno + 1,
                });
            }
            Ok(id - 1)
        };
        let (u, v) = (parse_endpoint(u)?, parse_endpoint(v)?);
        if graph_of[u] != graph_of[v] {
            return Err(MatchError::MalformedDataset {
                message: format!(
                    "edge joins nodes of different graphs ({} and {})",
                    graph_of[u] + 1,
                    graph_of[v] + 1
                ),
                line: lineno + 1,
            });
        }
        edges[graph_of[u]].push((local_index[u], local_index[v]));
    }

    let graphs = sizes
        .iter()
        .zip(edges)
        .map(|(&n, e)| Graph::new(n, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphCollection { graphs })
}

fn locate_files(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let entries = std::fs::read_dir(dir).map_err(|e| MatchError::io(dir.display().to_string(), e))?;
    let mut a_path = None;
    for entry in entries {
        let entry = entry.map_err(|e| MatchError::io(dir.display().to_string(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with("_A.txt") {
            a_path = Some((entry.path(), name.trim_end_matches("_A.txt").to_string()));
            break;
        }
    }
    let Some((a_path, stem)) = a_path else {
        return Err(MatchError::Ingest(format!(
            "no <DS>_A.txt file found in {}",
            dir.display()
        )));
    };
    let indicator = dir.join(format!("{stem}_graph_indicator.txt"));
    if !indicator.exists() {
        return Err(MatchError::Ingest(format!(
            "missing file {}",
            indicator.display()
        )));
    }
    Ok((a_path, indicator))
}
