use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::score::{rho, score_track, ScoreParams};
use crate::error::{Error, Result};
use crate::graph::{build_graph, enumerate_candidate_paths, AssocGraph, CandidateTrack, GraphConfig};
use crate::model::{Batch, GraphInput, InputSpec, Model};
use crate::sim::{Observation, ScanWindow};

/// Runs the network on `graph` and stores class probabilities on its edges.
pub fn predict_edges(model: &Model, graph: &mut AssocGraph, spec: &InputSpec) -> Result<()> {
    if graph.n_edges() == 0 {
        return Ok(());
    }
    let input = GraphInput::from_graph(graph, spec)?;
    let probs = model.predict(&Batch::new(&[&input])?)?;
    for (e, p) in graph.edges.iter_mut().zip(probs) {
        e.pred = Some(p);
    }
    Ok(())
}

/// Confidence of every edge from its stored prediction.
pub fn edge_confidence(graph: &AssocGraph, sp: &ScoreParams) -> Result<Vec<f64>> {
    graph
        .edges
        .iter()
        .map(|e| {
            e.pred
                .as_ref()
                .map(|p| rho(p, sp))
                .ok_or_else(|| Error::Missing("edge prediction".into()))
        })
        .collect()
}

/// Score-descending order; ties prefer longer tracks, then smaller node ids.
pub fn track_order(a: &CandidateTrack, b: &CandidateTrack) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.n_nodes().cmp(&a.n_nodes()))
        .then_with(|| a.node_ids.cmp(&b.node_ids))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Detection {
    /// Tracks above `gamma2`, sorted by [`track_order`].
    pub tracks: Vec<CandidateTrack>,
    pub truncated: bool,
}

/// Enumerates paths over confident edges and keeps those scoring above `gamma2`.
pub fn detect_tracks(graph: &AssocGraph, sp: &ScoreParams, gc: &GraphConfig) -> Result<Detection> {
    let conf = edge_confidence(graph, sp)?;
    let gate = |k: usize| conf[k] >= sp.edge_gate_eps;
    let set = enumerate_candidate_paths(graph, gc, Some(&gate));
    let mut tracks = Vec::new();
    for mut t in set.paths {
        t.rho = t.edge_ids.iter().map(|&k| conf[k]).collect();
        t.score = score_track(&t.rho, t.n_nodes(), sp)?;
        if t.score > sp.gamma2 {
            tracks.push(t);
        }
    }
    tracks.sort_by(track_order);
    Ok(Detection { tracks, truncated: set.truncated })
}

/// Greedy node-disjoint selection in [`track_order`].
pub fn prune_tracks(mut tracks: Vec<CandidateTrack>) -> Vec<CandidateTrack> {
    tracks.sort_by(track_order);
    let mut used = std::collections::HashSet::new();
    let mut out = Vec::new();
    for t in tracks {
        if t.node_ids.iter().all(|n| !used.contains(n)) {
            used.extend(t.node_ids.iter().copied());
            out.push(t);
        }
    }
    out
}

/// Confirmed tracks of one window together with its scored graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub graph: AssocGraph,
    pub confirmed: Vec<CandidateTrack>,
    pub truncated: bool,
}

/// Graph construction, inference, detection and pruning for one window.
pub fn process_window(
    model: &Model,
    window: &ScanWindow,
    v_u: f64,
    gc: &GraphConfig,
    sp: &ScoreParams,
) -> Result<WindowResult> {
    let (mut graph, _) = build_graph(window, gc, v_u)?;
    predict_edges(model, &mut graph, &model.dims.input)?;
    let det = detect_tracks(&graph, sp, gc)?;
    let confirmed = prune_tracks(det.tracks);
    Ok(WindowResult { graph, confirmed, truncated: det.truncated })
}

/// Serializable form of a confirmed track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub observations: Vec<Observation>,
    pub rho: Vec<f64>,
    pub score: f64,
    #[serde(serialize_with = "super::score::ser_ext", deserialize_with = "super::score::de_ext")]
    pub gamma2: f64,
}

impl TrackRecord {
    pub fn new(graph: &AssocGraph, track: &CandidateTrack, gamma2: f64) -> Self {
        Self {
            observations: track.node_ids.iter().map(|&i| graph.nodes[i].clone()).collect(),
            rho: track.rho.clone(),
            score: track.score,
            gamma2,
        }
    }
}
