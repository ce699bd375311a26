use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::correct::{attributed_target, pd_upper_bound, track_distance};
use super::nci::{baseline_gated_nci, NciParams};
use super::ospa::OspaParams;
use crate::error::{Error, Result};
use crate::graph::{AssocGraph, CandidateTrack, GraphConfig};
use crate::model::Model;
use crate::rng::substream;
use crate::sim::{
    ca_cfar, db_to_lin, propagate_target, random_targets, rician_power, simulate_window, stats::binomial_stderr,
    RadarConfig, ScanWindow, ScenarioConfig, TargetTruth,
};
use crate::track::{process_window, ScoreParams};

/// Scenario and sampling settings of a Monte-Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub snr_db: Vec<f64>,
    /// Sliding-window counts to report.
    pub windows: Vec<usize>,
    pub n_runs: usize,
    pub scenario: ScenarioConfig,
    /// Reference cells of the single-frame CA-CFAR baseline.
    pub cfar_ref: usize,
    pub cfar_guard: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
            windows: vec![1, 2, 3, 4, 5],
            n_runs: 100,
            scenario: ScenarioConfig::default(),
            cfar_ref: 16,
            cfar_guard: 2,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() || self.windows.is_empty() || self.windows.contains(&0) || self.n_runs == 0 {
            return Err(Error::config("monte carlo: need SNRs, positive window counts and n_runs >= 1"));
        }
        self.scenario.validate()
    }
}

/// Calibrated detectors compared in a study.
#[derive(Debug, Clone)]
pub struct Detectors<'a> {
    pub model: &'a Model,
    /// Scoring with the calibrated `gamma2`.
    pub score: &'a ScoreParams,
    /// Gates with the calibrated `gamma_nci`.
    pub nci: &'a NciParams,
    pub ospa: &'a OspaParams,
    /// Final false-alarm rate shared by all detectors.
    pub pfa2: f64,
    /// False-alarm rates measured at calibration for the graph detector and the NCI baseline.
    pub achieved: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub snr_db: f64,
    pub windows: usize,
    pub method: String,
    pub pd: f64,
    pub pd_stderr: f64,
    pub pfa2_achieved: Option<f64>,
    pub n_runs: usize,
    pub n_targets: usize,
}

/// A correct graph detection of a target whose plots admit no all-target path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundException {
    pub snr_db: f64,
    pub run: usize,
    pub window: usize,
    pub target: u32,
    pub distance: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<CurveRow>,
    pub exceptions: Vec<BoundException>,
    /// Windows whose path enumeration hit the cap.
    pub truncated_windows: usize,
    pub runtime_s: f64,
}

impl EvalReport {
    pub fn row(&self, snr_db: f64, windows: usize, method: &str) -> Option<&CurveRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.windows == windows && r.method == method)
    }
}

pub const GLP: &str = "GLP";
pub const NCI: &str = "GATED_NCI";
pub const CFAR: &str = "CA_CFAR";
pub const UPB: &str = "UPB";

/// Frames `start..start + len` of `seq` with frame indices rebased and truths
/// propagated to the first kept frame.
pub fn sub_window(seq: &ScanWindow, start: usize, len: usize) -> Result<ScanWindow> {
    if start + len > seq.frames.len() || len == 0 {
        return Err(Error::domain("sub-window exceeds the sequence"));
    }
    let dt = seq.times[start] - seq.times[0];
    let frames = seq.frames[start..start + len]
        .iter()
        .enumerate()
        .map(|(n, f)| f.iter().cloned().map(|mut z| {
            z.frame = n;
            z
        }).collect())
        .collect();
    Ok(ScanWindow {
        frames,
        times: seq.times[start..start + len].to_vec(),
        truths: seq.truths.iter().map(|t| propagate_target(t, dt)).collect(),
    })
}

/// One single-frame CA-CFAR decision on a target cell amid exponential noise.
pub fn cfar_trial<R: Rng + ?Sized>(snr_db: f64, n_ref: usize, guard: usize, pfa: f64, rng: &mut R) -> Result<bool> {
    let half = n_ref / 2;
    let len = 2 * (half + guard) + 1;
    let mut cells: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    cells[half + guard] = rician_power(db_to_lin(snr_db).sqrt(), rng);
    Ok(ca_cfar(&cells, n_ref, guard, pfa)?[half + guard])
}

/// Targets correctly detected among `tracks`, with their OSPA distances.
fn correct_targets(
    graph: &AssocGraph,
    tracks: &[CandidateTrack],
    window: &ScanWindow,
    p: &OspaParams,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    for t in tracks {
        let obs: Vec<_> = t.node_ids.iter().map(|&i| graph.nodes[i].clone()).collect();
        let Some(id) = attributed_target(&obs, &window.truths, window.times[0]) else { continue };
        let truth: &TargetTruth = window.truths.iter().find(|tr| tr.id == id).expect("attributed ids exist");
        let d = track_distance(&obs, truth, window.times[0], p)?;
        if d < p.kappa * p.eta && !out.iter().any(|(k, _)| *k == id) {
            out.push((id, d));
        }
    }
    Ok(out)
}

fn rate_row(snr_db: f64, windows: usize, method: &str, hits: usize, n: usize, pfa2: Option<f64>, runs: usize) -> CurveRow {
    let pd = if n > 0 { hits as f64 / n as f64 } else { 0.0 };
    CurveRow {
        snr_db,
        windows,
        method: method.to_string(),
        pd,
        pd_stderr: binomial_stderr(pd, n),
        pfa2_achieved: pfa2,
        n_runs: runs,
        n_targets: n,
    }
}

/// Detection probability versus SNR and sliding-window count for the graph
/// detector, gated NCI, single-frame CA-CFAR and the all-target-path bound.
///
/// Run `r` at SNR index `s` draws from substream `("mc", s·2³² + r)`. A
/// target counts as detected within `W` windows when at least one of the
/// first `W` windows detects it correctly; CA-CFAR reports the per-frame rate.
pub fn monte_carlo_curves(
    radar: &RadarConfig,
    gc: &GraphConfig,
    mc: &McConfig,
    det: &Detectors<'_>,
    seed: u64,
) -> Result<EvalReport> {
    mc.validate()?;
    det.ospa.validate()?;
    let start = Instant::now();
    let w_max = *mc.windows.iter().max().expect("validated");
    let n_frames = gc.l + w_max - 1;
    let mut rows = Vec::new();
    let mut exceptions = Vec::new();
    let mut truncated_windows = 0;
    for (si, &snr) in mc.snr_db.iter().enumerate() {
        // first window index detecting each target, per method
        let mut first = [Vec::new(), Vec::new(), Vec::new()];
        let (mut cfar_hits, mut cfar_n) = (0usize, 0usize);
        for run in 0..mc.n_runs {
            let mut rng = substream(seed, "mc", ((si as u64) << 32) | run as u64);
            let truths = random_targets(&mc.scenario.at_snr(snr), radar, n_frames, 0, &mut rng)?;
            let seq = simulate_window(&truths, 0.0, n_frames, radar, &mut rng)?;
            let mut hit: Vec<[Option<usize>; 3]> = vec![[None; 3]; truths.len()];
            for w in 0..w_max {
                let win = sub_window(&seq, w, gc.l)?;
                let glp = process_window(det.model, &win, radar.v_u, gc, det.score)?;
                let nci = baseline_gated_nci(&win, radar.v_u, gc, det.nci)?;
                truncated_windows += usize::from(glp.truncated) + usize::from(nci.truncated);
                let upb = pd_upper_bound(&win, gc);
                let glp_ok = correct_targets(&glp.graph, &glp.confirmed, &win, det.ospa)?;
                let nci_ok = correct_targets(&nci.graph, &nci.confirmed, &win, det.ospa)?;
                for (k, tr) in truths.iter().enumerate() {
                    let bound = upb.iter().any(|(id, ok)| *id == tr.id && *ok);
                    let g = glp_ok.iter().find(|(id, _)| *id == tr.id);
                    let flags = [g.is_some(), nci_ok.iter().any(|(id, _)| *id == tr.id), bound];
                    for m in 0..3 {
                        if flags[m] && hit[k][m].is_none() {
                            hit[k][m] = Some(w);
                        }
                    }
                    if let (Some((_, d)), false) = (g, bound) {
                        exceptions.push(BoundException {
                            snr_db: snr,
                            run,
                            window: w,
                            target: tr.id,
                            distance: *d,
                            limit: det.ospa.kappa * det.ospa.eta,
                        });
                    }
                }
            }
            for _ in 0..truths.len() * n_frames {
                cfar_hits += usize::from(cfar_trial(snr, mc.cfar_ref, mc.cfar_guard, det.pfa2, &mut rng)?);
                cfar_n += 1;
            }
            for h in hit {
                for m in 0..3 {
                    first[m].push(h[m]);
                }
            }
        }
        for &w in &mc.windows {
            let n = first[0].len();
            let count = |m: usize| first[m].iter().filter(|f| f.is_some_and(|x| x < w)).count();
            rows.push(rate_row(snr, w, GLP, count(0), n, Some(det.achieved[0]), mc.n_runs));
            rows.push(rate_row(snr, w, NCI, count(1), n, Some(det.achieved[1]), mc.n_runs));
            rows.push(rate_row(snr, w, CFAR, cfar_hits, cfar_n, Some(det.pfa2), mc.n_runs));
            rows.push(rate_row(snr, w, UPB, count(2), n, None, mc.n_runs));
        }
    }
    Ok(EvalReport { rows, exceptions, truncated_windows, runtime_s: start.elapsed().as_secs_f64() })
}
