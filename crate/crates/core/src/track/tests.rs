use proptest::prelude::*;

use super::*;
use crate::graph::{AssocGraph, CandidateTrack, Edge, GraphConfig};
use crate::model::{Model, ModelDims, InputSpec, Variant};
use crate::rng::substream;
use crate::sim::{Observation, Origin, Patch, RadarConfig};

fn node(frame: usize) -> Observation {
    Observation {
        t: frame as f64,
        r: 1e5,
        theta: 0.0,
        v: 0.0,
        d: 0,
        s: 10.0,
        power: 10.0,
        frame,
        patch: Patch::new(1, 1, vec![1.0]).unwrap(),
        origin: Origin::Noise,
    }
}

fn graph(frames: &[usize], edges: &[(usize, usize, [f64; 3])]) -> AssocGraph {
    AssocGraph {
        nodes: frames.iter().map(|&f| node(f)).collect(),
        edges: edges
            .iter()
            .map(|&(u, w, p)| Edge { u, w, e: [0.0; 2], dcd: 0, label: None, pred: Some(p) })
            .collect(),
        n_frames: frames.iter().max().map_or(0, |m| m + 1),
    }
}

fn track(nodes: &[usize], score: f64) -> CandidateTrack {
    CandidateTrack { node_ids: nodes.to_vec(), edge_ids: vec![], rho: vec![], score }
}

const SURE_TT: [f64; 3] = [0.0, 0.0, 1.0];

#[test]
fn confidence_examples() {
    let sp = ScoreParams::default();
    assert_eq!(rho(&[1.0, 0.0, 0.0], &sp), 0.0);
    assert_eq!(rho(&SURE_TT, &sp), 1.0);
    assert!((rho(&[0.2, 0.5, 0.3], &sp) - 0.40).abs() < 1e-15);
}

#[test]
fn score_examples() {
    let sp = ScoreParams::default();
    assert!((score_track(&[1.0; 4], 5, &sp).unwrap() - 1.05).abs() < 1e-15);
    let flat = ScoreParams { lambda: 0.0, ..sp.clone() };
    assert!((score_track(&[0.3; 6], 7, &flat).unwrap() - 0.3).abs() < 1e-15);
    assert!((score_track(&[0.4], 2, &sp).unwrap() - 0.42).abs() < 1e-15);
    assert!(score_track(&[], 1, &sp).is_err());
}

#[test]
fn missing_predictions_are_reported() {
    let mut g = graph(&[0, 1], &[(0, 1, SURE_TT)]);
    g.edges[0].pred = None;
    assert!(edge_confidence(&g, &ScoreParams::default()).is_err());
}

#[test]
fn detection_examples() {
    let gc = GraphConfig { m: 3, ..GraphConfig::default() };
    let chain = graph(&[0, 1, 2, 3, 4], &[(0, 1, SURE_TT), (1, 2, SURE_TT), (2, 3, SURE_TT), (3, 4, SURE_TT)]);
    let sp = ScoreParams { gamma2: 0.5, ..ScoreParams::default() };
    let det = detect_tracks(&chain, &sp, &gc).unwrap();
    assert_eq!(det.tracks.len(), 1);
    assert!((det.tracks[0].score - 1.05).abs() < 1e-12);
    assert_eq!(det.tracks[0].rho, vec![1.0; 4]);

    let never = sp.with_gamma2(f64::INFINITY);
    assert!(detect_tracks(&chain, &never, &gc).unwrap().tracks.is_empty());
    let bare = graph(&[0, 1, 2], &[]);
    assert!(detect_tracks(&bare, &sp, &gc).unwrap().tracks.is_empty());
}

#[test]
fn weak_edges_are_gated_out() {
    let gc = GraphConfig { m: 3, ..GraphConfig::default() };
    let g = graph(&[0, 1, 2], &[(0, 1, SURE_TT), (1, 2, [0.95, 0.05, 0.0])]);
    let sp = ScoreParams { gamma2: f64::NEG_INFINITY, ..ScoreParams::default() };
    assert!(detect_tracks(&g, &sp, &gc).unwrap().tracks.is_empty());
    let open = ScoreParams { edge_gate_eps: 0.0, ..sp };
    assert_eq!(detect_tracks(&g, &open, &gc).unwrap().tracks.len(), 1);
}

#[test]
fn detection_flags_truncation() {
    let gc = GraphConfig { m: 2, max_paths: 1, ..GraphConfig::default() };
    let g = graph(&[0, 1, 1], &[(0, 1, SURE_TT), (0, 2, SURE_TT)]);
    let det = detect_tracks(&g, &ScoreParams::default(), &gc).unwrap();
    assert!(det.truncated);
    assert_eq!(det.tracks.len(), 1);
}

#[test]
fn pruning_examples() {
    let disjoint = prune_tracks(vec![track(&[0, 1, 2], 0.7), track(&[3, 4, 5], 0.9)]);
    assert_eq!(disjoint.len(), 2);
    assert_eq!(disjoint[0].node_ids, vec![3, 4, 5]);

    let shared = prune_tracks(vec![track(&[0, 1, 2], 0.8), track(&[2, 3, 4], 0.9)]);
    assert_eq!(shared.len(), 1);
    assert_eq!(shared[0].score, 0.9);

    let tie = prune_tracks(vec![track(&[5, 6, 7, 8], 0.9), track(&[0, 1, 2, 3, 5], 0.9)]);
    assert_eq!(tie.len(), 1);
    assert_eq!(tie[0].n_nodes(), 5);

    let lexi = prune_tracks(vec![track(&[4, 5, 6], 0.9), track(&[1, 5, 7], 0.9)]);
    assert_eq!(lexi[0].node_ids, vec![1, 5, 7]);
}

proptest! {
    #[test]
    fn scaling_alpha_scales_confidence(
        p in (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| { let (lo, hi) = (a.min(b), a.max(b)); [lo, hi - lo, 1.0 - hi] }),
        c in 0.01..100.0f64,
    ) {
        let sp = ScoreParams::default();
        let scaled = ScoreParams { alpha: sp.alpha.map(|a| a * c), ..sp.clone() };
        let r = rho(&p, &sp);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
        prop_assert!((rho(&p, &scaled) - c * r).abs() <= 1e-12 * c.max(1.0));
    }

    #[test]
    fn confirmed_tracks_are_disjoint_and_above_threshold(
        raw in proptest::collection::vec((proptest::collection::btree_set(0usize..20, 2..6), 0.0..1.0f64), 0..30),
        g2 in 0.0..1.0f64,
    ) {
        let tracks: Vec<CandidateTrack> = raw
            .iter()
            .map(|(nodes, s)| track(&nodes.iter().copied().collect::<Vec<_>>(), *s))
            .filter(|t| t.score > g2)
            .collect();
        let kept = prune_tracks(tracks.clone());
        let mut seen = std::collections::HashSet::new();
        for t in &kept {
            prop_assert!(t.score > g2);
            for n in &t.node_ids {
                prop_assert!(seen.insert(*n));
            }
        }
        // every rejected track collides with a kept one of higher order
        for t in &tracks {
            if !kept.contains(t) {
                prop_assert!(kept.iter().any(|k| k.node_ids.iter().any(|n| t.node_ids.contains(n))));
            }
        }
    }
}

#[test]
fn threshold_from_scores() {
    let scores: Vec<f64> = (0..100).map(|k| k as f64 / 100.0).collect();
    let c = gamma2_from_scores(&scores, 1_000_000, 2e-5).unwrap();
    assert_eq!(c.n_false, 20);
    assert_eq!(c.gamma2, 0.79);
    assert!((c.achieved_pfa2 - 2e-5).abs() < 1e-18);

    let loose = gamma2_from_scores(&scores, 1000, 0.5).unwrap();
    assert_eq!(loose.gamma2, f64::NEG_INFINITY);
    assert_eq!(loose.n_false, 100);

    assert!(matches!(gamma2_from_scores(&scores, 1_000_000, 1e-6), Err(crate::Error::Calibration(_))));
}

#[test]
fn constant_shift_keeps_the_accepted_set() {
    // equal-length tracks: doubling lambda shifts every score by lambda * N_V
    let base: Vec<f64> = (0..200).map(|k| ((k * 37) % 200) as f64 / 250.0 + 0.05).collect();
    let shifted: Vec<f64> = base.iter().map(|s| s + 0.05).collect();
    let a = gamma2_from_scores(&base, 1_000_000, 3e-5).unwrap();
    let b = gamma2_from_scores(&shifted, 1_000_000, 3e-5).unwrap();
    let pass_a: Vec<usize> = (0..200).filter(|&k| base[k] > a.gamma2).collect();
    let pass_b: Vec<usize> = (0..200).filter(|&k| shifted[k] > b.gamma2).collect();
    assert_eq!(pass_a, pass_b);
    assert!((b.gamma2 - a.gamma2 - 0.05).abs() < 1e-12);
}

#[test]
fn infinite_thresholds_round_trip_as_json() {
    for g in [f64::NEG_INFINITY, f64::INFINITY, 0.25] {
        let sp = ScoreParams::default().with_gamma2(g);
        let text = serde_json::to_string(&sp).unwrap();
        assert_eq!(serde_json::from_str::<ScoreParams>(&text).unwrap(), sp);
    }
    assert!(serde_json::from_str::<ScoreParams>(r#"{"gamma2": "big"}"#).is_err());
}

#[test]
fn calibration_runs_end_to_end() {
    let radar = RadarConfig {
        n_pulses: 8,
        patch_range_cells: 3,
        r_min_m: 30e3,
        r_max_m: 33e3,
        az_min_deg: -4.0,
        az_max_deg: 4.0,
        pfa1: 5e-3,
        ..RadarConfig::default()
    };
    let dims = ModelDims {
        gat_dims: vec![8],
        heads: 2,
        n_m: 8,
        input: InputSpec { n_doppler: 8, patch_range: 3, v_u: 300.0 },
        ..ModelDims::default()
    };
    let model = Model::init(&dims, Variant::Full, &mut substream(1, "init", 0)).unwrap();
    let gc = GraphConfig::default();
    let sp = ScoreParams { edge_gate_eps: 0.0, ..ScoreParams::default() };
    let a = calibrate_gamma2(&model, &radar, &gc, &sp, 1e-3, 20, 5).unwrap();
    let b = calibrate_gamma2(&model, &radar, &gc, &sp, 1e-3, 20, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_cells, 20 * radar.n_cells() as u64);
    assert!(a.achieved_pfa2 <= 1e-3);
    assert!(a.scores.windows(2).all(|w| w[0] >= w[1]));
}
