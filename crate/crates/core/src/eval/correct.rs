use serde::{Deserialize, Serialize};

use super::ospa::{ospa, OspaParams};
use super::smooth::smooth_track;
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::rng::substream;
use crate::sim::{propagate_target, random_targets, simulate_window, Observation, RadarConfig, ScanWindow, ScenarioConfig, TargetTruth};

/// Cutoff of `factor` times the larger of the range and cross-range noise
/// std at range `r_ref` and SNR `snr_db`.
pub fn eta_from_radar(radar: &RadarConfig, r_ref: f64, snr_db: f64, factor: f64) -> f64 {
    let amp = 10f64.powf(snr_db / 20.0);
    let range_std = radar.noise_coeff * radar.range_res_m / amp;
    let cross_std = radar.noise_coeff * radar.az_res_rad() * r_ref / amp;
    factor * range_std.max(cross_std)
}

/// Position of `truth` (state at `t_ref`) at time `t`.
pub fn truth_position(truth: &TargetTruth, t_ref: f64, t: f64) -> [f64; 2] {
    let (x, y) = propagate_target(truth, t - t_ref).position();
    [x, y]
}

/// Target a track is attributed to: the most frequent target origin, ties
/// broken by the smallest mean distance to the truth. `None` without target plots.
pub fn attributed_target(obs: &[Observation], truths: &[TargetTruth], t_ref: f64) -> Option<u32> {
    let mut counts: Vec<(u32, usize)> = Vec::new();
    for id in obs.iter().filter_map(|z| z.origin.target()) {
        match counts.iter_mut().find(|(k, _)| *k == id) {
            Some(c) => c.1 += 1,
            None => counts.push((id, 1)),
        }
    }
    let top = counts.iter().map(|c| c.1).max()?;
    let mean_dist = |id: u32| {
        truths.iter().find(|t| t.id == id).map_or(f64::INFINITY, |tr| {
            obs.iter()
                .map(|z| {
                    let (x, y) = z.cartesian();
                    let p = truth_position(tr, t_ref, z.t);
                    (x - p[0]).hypot(y - p[1])
                })
                .sum::<f64>()
                / obs.len() as f64
        })
    };
    counts
        .iter()
        .filter(|c| c.1 == top)
        .map(|c| (c.0, mean_dist(c.0)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|c| c.0)
}

/// OSPA distance between a smoothed track and the truth at the plot times.
pub fn track_distance(obs: &[Observation], truth: &TargetTruth, t_ref: f64, p: &OspaParams) -> Result<f64> {
    let times: Vec<f64> = obs.iter().map(|z| z.t).collect();
    let pts: Vec<[f64; 2]> = obs.iter().map(|z| z.cartesian().into()).collect();
    let smooth = smooth_track(&times, &pts)?;
    let truth_pts: Vec<[f64; 2]> = times.iter().map(|&t| truth_position(truth, t_ref, t)).collect();
    ospa(&truth_pts, &smooth, p)
}

/// `d < κη` for the smoothed track against the truth.
pub fn is_correct_detection(obs: &[Observation], truth: &TargetTruth, t_ref: f64, p: &OspaParams) -> Result<bool> {
    Ok(track_distance(obs, truth, t_ref, p)? < p.kappa * p.eta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaCalibration {
    pub kappa: f64,
    pub quantile: f64,
    /// `d / η` of every pure-target track, ascending.
    pub ratios: Vec<f64>,
}

/// Nearest-rank `q`-quantile of a sorted slice.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// `q`-quantile of `d / η` over smoothed tracks built from one target's
/// detections (at least `gc.m` plots) in `n_trials` simulated windows.
///
/// The returned `kappa` is kept inside `(0, 1)`.
pub fn calibrate_kappa(
    radar: &RadarConfig,
    gc: &GraphConfig,
    scenario: &ScenarioConfig,
    p: &OspaParams,
    n_trials: usize,
    q: f64,
    seed: u64,
) -> Result<KappaCalibration> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain("kappa quantile must lie in (0, 1]"));
    }
    let mut ratios = Vec::new();
    for k in 0..n_trials {
        let mut rng = substream(seed, "calibrate-kappa", k as u64);
        let truths = random_targets(scenario, radar, gc.l, 0, &mut rng)?;
        let window = simulate_window(&truths, 0.0, gc.l, radar, &mut rng)?;
        for tr in &truths {
            let obs = target_plots(&window, tr.id);
            if obs.len() >= gc.m.max(2) {
                ratios.push(track_distance(&obs, tr, window.times[0], p)? / p.eta);
            }
        }
    }
    if ratios.is_empty() {
        return Err(Error::Calibration("no pure-target tracks were formed; raise n_trials or SNR".into()));
    }
    ratios.sort_by(f64::total_cmp);
    let quantile = nearest_rank(&ratios, q);
    Ok(KappaCalibration { kappa: quantile.clamp(1e-12, 1.0 - 1e-12), quantile: q, ratios })
}

/// Detected plots of target `id` in frame order.
pub fn target_plots(window: &ScanWindow, id: u32) -> Vec<Observation> {
    window.observations().filter(|z| z.origin.target() == Some(id)).cloned().collect()
}

/// Whether each truth target's detections contain a run of at least `gc.m`
/// plots with frame gaps of at most `gc.q`.
pub fn pd_upper_bound(window: &ScanWindow, gc: &GraphConfig) -> Vec<(u32, bool)> {
    window
        .truths
        .iter()
        .map(|tr| {
            let frames: Vec<usize> = target_plots(window, tr.id).iter().map(|z| z.frame).collect();
            let mut best = usize::from(!frames.is_empty());
            let mut run = best;
            for w in frames.windows(2) {
                run = if w[1] - w[0] <= gc.q { run + 1 } else { 1 };
                best = best.max(run);
            }
            (tr.id, best >= gc.m)
        })
        .collect()
}
