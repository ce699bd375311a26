use serde::{Deserialize, Serialize};

use super::features::edge_features;
use crate::error::{Error, Result};
use crate::sim::{Observation, Origin, ScanWindow};

/// Gating and track-length rules for association graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub v_max: f64,
    /// Look-ahead in frames; tolerates `q − 1` consecutive misses.
    pub q: usize,
    /// Window length in frames.
    pub l: usize,
    /// Minimum nodes per candidate track.
    pub m: usize,
    pub max_paths: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { v_max: 1500.0, q: 2, l: 5, m: 3, max_paths: 10_000 }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.q && self.q < self.l) {
            return Err(Error::config("graph: need 1 <= q < l"));
        }
        if self.m < 2 {
            return Err(Error::config("graph: m must be at least 2"));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::config("graph: v_max must be positive"));
        }
        if self.max_paths == 0 {
            return Err(Error::config("graph: max_paths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeLabel {
    /// Both ends false alarms, or two different targets.
    FF,
    /// Exactly one end on a target.
    TF,
    /// Both ends on the same target.
    TT,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 3] = [EdgeLabel::FF, EdgeLabel::TF, EdgeLabel::TT];

    pub fn class(self) -> usize {
        self as usize
    }

    pub fn from_class(c: usize) -> Option<Self> {
        Self::ALL.get(c).copied()
    }

    pub fn of(a: Origin, b: Origin) -> Self {
        match (a, b) {
            (Origin::Target(x), Origin::Target(y)) if x == y => EdgeLabel::TT,
            (Origin::Target(_), Origin::Target(_)) | (Origin::Noise, Origin::Noise) => EdgeLabel::FF,
            _ => EdgeLabel::TF,
        }
    }
}

/// Temporal edge from the earlier node `u` to the later node `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub w: usize,
    /// Ambiguity residuals `[F_E,1, F_E,2]` in m/s.
    pub e: [f64; 2],
    pub dcd: usize,
    pub label: Option<EdgeLabel>,
    pub pred: Option<[f64; 3]>,
}

/// Observation association graph over one scan window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocGraph {
    /// Nodes in frame order.
    pub nodes: Vec<Observation>,
    /// Sorted by `(u, w)`.
    pub edges: Vec<Edge>,
    pub n_frames: usize,
}

impl AssocGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edge ids per node, ascending in `w`.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            out[e.u].push(k);
        }
        out
    }

    pub fn labels(&self) -> Result<Vec<EdgeLabel>> {
        self.edges
            .iter()
            .map(|e| e.label.ok_or_else(|| Error::Missing("edge label".into())))
            .collect()
    }

    /// Distinct target ids among the nodes, ascending.
    pub fn target_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.nodes.iter().filter_map(|z| z.origin.target()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Fills each edge label from the origins of its end nodes.
pub fn label_edges(graph: &mut AssocGraph) {
    for e in &mut graph.edges {
        e.label = Some(EdgeLabel::of(graph.nodes[e.u].origin, graph.nodes[e.w].origin));
    }
}

/// Builds the gated graph with features and labels. Also returns the number
/// of gate evaluations performed.
pub fn build_graph(window: &ScanWindow, gc: &GraphConfig, v_u: f64) -> Result<(AssocGraph, usize)> {
    gc.validate()?;
    window.validate()?;
    let nodes: Vec<Observation> = window.observations().cloned().collect();
    let n_frames = window.frames.len();
    let mut frame_start = Vec::with_capacity(n_frames + 1);
    let mut acc = 0;
    for f in &window.frames {
        frame_start.push(acc);
        acc += f.len();
    }
    frame_start.push(acc);
    let xy: Vec<(f64, f64)> = nodes.iter().map(Observation::cartesian).collect();

    let mut edges = Vec::new();
    let mut evals = 0usize;
    for u in 0..nodes.len() {
        let fu = nodes[u].frame;
        let last = (fu + gc.q).min(n_frames.saturating_sub(1));
        if fu + 1 > last {
            continue;
        }
        for w in frame_start[fu + 1]..frame_start[last + 1] {
            evals += 1;
            let dt = nodes[w].t - nodes[u].t;
            let dist = (xy[w].0 - xy[u].0).hypot(xy[w].1 - xy[u].1);
            if dist > gc.v_max * dt {
                continue;
            }
            let (a, b) = (&nodes[u], &nodes[w]);
            let (e, dcd) = edge_features(a, b, v_u)?;
            edges.push(Edge { u, w, e, dcd, label: Some(EdgeLabel::of(a.origin, b.origin)), pred: None });
        }
    }
    Ok((AssocGraph { nodes, edges, n_frames }, evals))
}

/// Expected pairwise gate tests for `n_fa` plots per frame.
pub fn estimate_graph_ops(l: usize, q: usize, n_fa: f64) -> Result<f64> {
    if !(1 <= q && q < l) {
        return Err(Error::config("need 1 <= q < l"));
    }
    let (l, q) = (l as f64, q as f64);
    Ok(q * (l - q / 2.0 - 0.5) * n_fa * n_fa)
}
