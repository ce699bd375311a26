use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{build_graph, enumerate_candidate_paths, AssocGraph, GraphConfig};
use crate::rng::substream;
use crate::sim::{simulate_window, RadarConfig, ScanWindow};
use crate::track::{gamma2_from_scores, prune_tracks, Detection, Gamma2Calibration, WindowResult};

/// Gates and threshold of the gated non-coherent integration baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NciParams {
    /// Largest accepted velocity residual, m/s.
    pub fe_gate: f64,
    /// Largest accepted Doppler channel difference.
    pub dcd_gate: usize,
    #[serde(serialize_with = "crate::track::ser_ext", deserialize_with = "crate::track::de_ext")]
    pub gamma_nci: f64,
}

impl NciParams {
    /// Three-sigma gates at reference SNR `snr_db`.
    pub fn from_radar(radar: &RadarConfig, snr_db: f64) -> Self {
        let amp = 10f64.powf(snr_db / 20.0);
        let sigma_r = radar.noise_coeff * radar.range_res_m / amp;
        let sigma_v = radar.noise_coeff * radar.doppler_res() / amp;
        let t = radar.frame_period_s;
        let fe = 3.0 * (2.0 * sigma_r * sigma_r / (t * t) + sigma_v * sigma_v).sqrt();
        let dcd = (3.0 * std::f64::consts::SQRT_2 * sigma_v / radar.doppler_res()).ceil() as usize + 1;
        Self { fe_gate: fe, dcd_gate: dcd, gamma_nci: f64::INFINITY }
    }

    fn accepts(&self, graph: &AssocGraph, k: usize) -> bool {
        let e = &graph.edges[k];
        e.e[0].abs() <= self.fe_gate && e.e[1].abs() <= self.fe_gate && e.dcd <= self.dcd_gate
    }
}

/// Paths over Doppler-gated edges scored by their summed linear plot power,
/// kept above `gamma_nci`.
pub fn nci_detect(graph: &AssocGraph, gc: &GraphConfig, np: &NciParams) -> Detection {
    let gate = |k: usize| np.accepts(graph, k);
    let set = enumerate_candidate_paths(graph, gc, Some(&gate));
    let mut tracks: Vec<_> = set
        .paths
        .into_iter()
        .map(|mut t| {
            t.score = t.node_ids.iter().map(|&i| graph.nodes[i].power).sum();
            t
        })
        .filter(|t| t.score > np.gamma_nci)
        .collect();
    tracks.sort_by(crate::track::track_order);
    Detection { tracks, truncated: set.truncated }
}

/// Graph construction, gated integration and pruning for one window.
pub fn baseline_gated_nci(window: &ScanWindow, v_u: f64, gc: &GraphConfig, np: &NciParams) -> Result<WindowResult> {
    let (graph, _) = build_graph(window, gc, v_u)?;
    let det = nci_detect(&graph, gc, np);
    Ok(WindowResult { confirmed: prune_tracks(det.tracks), graph, truncated: det.truncated })
}

/// Threshold on the integrated power giving `target_pfa2` on target-free windows.
pub fn calibrate_gamma_nci(
    radar: &RadarConfig,
    gc: &GraphConfig,
    np: &NciParams,
    target_pfa2: f64,
    n_trials: usize,
    seed: u64,
) -> Result<Gamma2Calibration> {
    let open = NciParams { gamma_nci: f64::NEG_INFINITY, ..np.clone() };
    let mut scores = Vec::new();
    for k in 0..n_trials {
        let mut rng = substream(seed, "calibrate-nci", k as u64);
        let window = simulate_window(&[], 0.0, gc.l, radar, &mut rng)?;
        let res = baseline_gated_nci(&window, radar.v_u, gc, &open)?;
        scores.extend(res.confirmed.iter().map(|t| t.score));
    }
    gamma2_from_scores(&scores, (radar.n_cells() * n_trials) as u64, target_pfa2)
}
