use serde::{Deserialize, Serialize};

use super::detect::process_window;
use super::score::ScoreParams;
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::model::Model;
use crate::rng::substream;
use crate::sim::{simulate_window, stats::binomial_stderr, RadarConfig};

/// Fewest false tracks that must exceed the calibrated threshold.
pub const MIN_CALIBRATION_TRACKS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma2Calibration {
    #[serde(serialize_with = "super::score::ser_ext", deserialize_with = "super::score::de_ext")]
    pub gamma2: f64,
    pub target_pfa2: f64,
    /// Detection cells times windows.
    pub n_cells: u64,
    /// Confirmed false tracks above `gamma2` on the calibration data.
    pub n_false: u64,
    pub achieved_pfa2: f64,
    pub stderr: f64,
    /// Every confirmed false-track score seen with no threshold, descending.
    pub scores: Vec<f64>,
}

/// Threshold with at most `⌊target · n_cells⌋` scores strictly above it.
///
/// When every score may pass, the threshold is `-inf`.
pub fn gamma2_from_scores(scores: &[f64], n_cells: u64, target_pfa2: f64) -> Result<Gamma2Calibration> {
    if !(target_pfa2 > 0.0 && target_pfa2 < 1.0) || n_cells == 0 {
        return Err(Error::domain("pfa2 must lie in (0, 1) over a nonzero cell count"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let allowed = (target_pfa2 * n_cells as f64).floor() as usize;
    let gamma2 = if allowed >= sorted.len() {
        f64::NEG_INFINITY
    } else if allowed < MIN_CALIBRATION_TRACKS {
        return Err(Error::Calibration(format!(
            "only {allowed} false tracks allowed over {n_cells} cells at pfa2 {target_pfa2:e}; \
             at least {MIN_CALIBRATION_TRACKS} are needed, so raise n_trials or pfa2"
        )));
    } else {
        sorted[allowed]
    };
    let n_false = sorted.iter().filter(|s| **s > gamma2).count() as u64;
    let achieved = n_false as f64 / n_cells as f64;
    Ok(Gamma2Calibration {
        gamma2,
        target_pfa2,
        n_cells,
        n_false,
        achieved_pfa2: achieved,
        stderr: binomial_stderr(target_pfa2, n_cells as usize),
        scores: sorted,
    })
}

/// Scores of confirmed tracks in `n_trials` target-free windows processed with no threshold.
///
/// Window `k` uses substream `(stream, k)`.
pub fn false_track_scores(
    model: &Model,
    radar: &RadarConfig,
    gc: &GraphConfig,
    sp: &ScoreParams,
    n_trials: usize,
    seed: u64,
    stream: &str,
) -> Result<Vec<f64>> {
    let open = sp.with_gamma2(f64::NEG_INFINITY);
    let mut scores = Vec::new();
    for k in 0..n_trials {
        let mut rng = substream(seed, stream, k as u64);
        let window = simulate_window(&[], 0.0, gc.l, radar, &mut rng)?;
        let res = process_window(model, &window, radar.v_u, gc, &open)?;
        scores.extend(res.confirmed.iter().map(|t| t.score));
    }
    Ok(scores)
}

/// Threshold giving `target_pfa2` false tracks per detection cell on target-free data.
pub fn calibrate_gamma2(
    model: &Model,
    radar: &RadarConfig,
    gc: &GraphConfig,
    sp: &ScoreParams,
    target_pfa2: f64,
    n_trials: usize,
    seed: u64,
) -> Result<Gamma2Calibration> {
    let scores = false_track_scores(model, radar, gc, sp, n_trials, seed, "calibrate-gamma2")?;
    gamma2_from_scores(&scores, (radar.n_cells() * n_trials) as u64, target_pfa2)
}
