//! Observation association graphs: max-velocity gating with look-ahead,
//! ambiguity-resolved edge features, ground-truth labels and candidate paths.

mod build;
mod features;
mod paths;

pub use build::{build_graph, estimate_graph_ops, label_edges, AssocGraph, Edge, EdgeLabel, GraphConfig};
pub use features::{edge_features, estimate_radial_velocities, max_velocity_gate, resolve_ambiguity};
pub use paths::{enumerate_candidate_paths, CandidateTrack, PathSet};
