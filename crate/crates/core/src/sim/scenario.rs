use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::RadarConfig;
use super::measure::propagate_target;
use super::types::TargetTruth;
use crate::error::{Error, Result};

/// Distribution of random target sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub min_targets: usize,
    pub max_targets: usize,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Candidate SNRs in dB; each target draws one uniformly.
    pub snr_db: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            min_targets: 1,
            max_targets: 3,
            min_speed: 50.0,
            max_speed: 300.0,
            snr_db: vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_targets > self.max_targets {
            return Err(Error::config("scenario: min_targets exceeds max_targets"));
        }
        if !(0.0 <= self.min_speed && self.min_speed <= self.max_speed) {
            return Err(Error::config("scenario: need 0 <= min_speed <= max_speed"));
        }
        if self.max_targets > 0 && self.snr_db.is_empty() {
            return Err(Error::config("scenario: snr_db list is empty"));
        }
        Ok(())
    }

    /// Same distribution with every target at one SNR.
    pub fn at_snr(&self, snr_db: f64) -> Self {
        Self { snr_db: vec![snr_db], ..self.clone() }
    }
}

/// Draws targets that stay inside the region for `n_frames` frames.
/// Ids are assigned from `first_id` upward.
pub fn random_targets<R: Rng + ?Sized>(
    sc: &ScenarioConfig,
    cfg: &RadarConfig,
    n_frames: usize,
    first_id: u32,
    rng: &mut R,
) -> Result<Vec<TargetTruth>> {
    sc.validate()?;
    let count = rng.random_range(sc.min_targets..=sc.max_targets);
    let span = n_frames.saturating_sub(1) as f64 * cfg.frame_period_s;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let snr_db = sc.snr_db[rng.random_range(0..sc.snr_db.len())];
        let mut placed = None;
        for _ in 0..10_000 {
            let r = rng.random_range(cfg.r_min_m..=cfg.r_max_m);
            let th = rng.random_range(cfg.az_min_deg..=cfg.az_max_deg).to_radians();
            let speed = rng.random_range(sc.min_speed..=sc.max_speed);
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let t = TargetTruth {
                id: first_id + k as u32,
                state: [r * th.cos(), speed * heading.cos(), r * th.sin(), speed * heading.sin()],
                snr_db,
            };
            let end = propagate_target(&t, span);
            if cfg.in_region(end.range(), end.azimuth()) {
                placed = Some(t);
                break;
            }
        }
        out.push(placed.ok_or_else(|| {
            Error::config("scenario: region too small to hold a target for the whole window")
        })?);
    }
    Ok(out)
}
