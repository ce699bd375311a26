use serde::{Deserialize, Serialize};

use super::build::{AssocGraph, GraphConfig};

/// Time-ordered node path with its connecting edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrack {
    pub node_ids: Vec<usize>,
    pub edge_ids: Vec<usize>,
    /// Per-edge confidence; empty until scored.
    pub rho: Vec<f64>,
    pub score: f64,
}

impl CandidateTrack {
    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    pub paths: Vec<CandidateTrack>,
    /// Set when enumeration stopped at `max_paths`.
    pub truncated: bool,
}

/// Maximal time-increasing paths with at least `gc.m` nodes over the edges
/// accepted by `gate`.
///
/// A path is maximal when its first node has no incoming and its last node
/// no outgoing accepted edge. Sources are visited in node-id order and
/// successors in ascending id, so the output order is deterministic.
pub fn enumerate_candidate_paths(
    graph: &AssocGraph,
    gc: &GraphConfig,
    gate: Option<&dyn Fn(usize) -> bool>,
) -> PathSet {
    let n = graph.n_nodes();
    let accept = |k: usize| gate.is_none_or(|g| g(k));
    let mut succ: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut has_in = vec![false; n];
    for (k, e) in graph.edges.iter().enumerate() {
        if accept(k) {
            succ[e.u].push((e.w, k));
            has_in[e.w] = true;
        }
    }
    for s in &mut succ {
        s.sort_unstable();
    }

    let mut out = PathSet::default();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    // explicit stack of (node, next successor index)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    'sources: for src in 0..n {
        if has_in[src] || succ[src].is_empty() {
            continue;
        }
        nodes.clear();
        edges.clear();
        nodes.push(src);
        stack.push((src, 0));
        while let Some(top) = stack.last_mut() {
            let (v, i) = *top;
            if i < succ[v].len() {
                top.1 += 1;
                let (w, k) = succ[v][i];
                nodes.push(w);
                edges.push(k);
                stack.push((w, 0));
                continue;
            }
            if succ[v].is_empty() && nodes.len() >= gc.m {
                if out.paths.len() == gc.max_paths {
                    out.truncated = true;
                    stack.clear();
                    break 'sources;
                }
                out.paths.push(track(nodes.clone(), edges.clone()));
            }
            stack.pop();
            nodes.pop();
            edges.pop();
        }
    }
    out
}

fn track(node_ids: Vec<usize>, edge_ids: Vec<usize>) -> CandidateTrack {
    CandidateTrack { node_ids, edge_ids, rho: Vec::new(), score: 0.0 }
}
