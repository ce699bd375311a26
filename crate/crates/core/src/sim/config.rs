use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coherent radar and surveillance-region parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    pub range_res_m: f64,
    pub az_res_deg: f64,
    /// Slow-time pulses per dwell; equals the Doppler channel count.
    pub n_pulses: usize,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub az_min_deg: f64,
    pub az_max_deg: f64,
    /// Unambiguous radial-velocity span.
    pub v_u: f64,
    pub frame_period_s: f64,
    /// Per-cell false-alarm probability at the primary threshold.
    pub pfa1: f64,
    pub patch_range_cells: usize,
    /// Measurement noise std is `noise_coeff · resolution / √SNR`.
    pub noise_coeff: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            range_res_m: 100.0,
            az_res_deg: 2.0,
            n_pulses: 32,
            r_min_m: 100e3,
            r_max_m: 300e3,
            az_min_deg: -60.0,
            az_max_deg: 60.0,
            v_u: 300.0,
            frame_period_s: 1.0,
            pfa1: 1e-3,
            patch_range_cells: 5,
            noise_coeff: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(format!("radar: {msg}")));
        if !(self.r_min_m < self.r_max_m) {
            return bad("r_min_m must be below r_max_m");
        }
        if !(self.az_min_deg < self.az_max_deg) {
            return bad("az_min_deg must be below az_max_deg");
        }
        if self.n_pulses < 2 {
            return bad("n_pulses must be at least 2");
        }
        if !(self.pfa1 > 0.0 && self.pfa1 < 1.0) {
            return bad("pfa1 must lie in (0, 1)");
        }
        if self.patch_range_cells == 0 || self.patch_range_cells.is_multiple_of(2) {
            return bad("patch_range_cells must be odd and >= 1");
        }
        if !(self.range_res_m > 0.0 && self.az_res_deg > 0.0 && self.v_u > 0.0 && self.frame_period_s > 0.0) {
            return bad("resolutions, v_u and frame period must be positive");
        }
        if !(self.noise_coeff >= 0.0) {
            return bad("noise_coeff must be non-negative");
        }
        Ok(())
    }

    pub fn n_doppler(&self) -> usize {
        self.n_pulses
    }

    pub fn n_range_cells(&self) -> usize {
        ((self.r_max_m - self.r_min_m) / self.range_res_m).round().max(1.0) as usize
    }

    pub fn n_az_cells(&self) -> usize {
        ((self.az_max_deg - self.az_min_deg) / self.az_res_deg).round().max(1.0) as usize
    }

    /// Detection cells per frame, `N_r · N_θ · N_D`.
    pub fn n_cells(&self) -> usize {
        self.n_range_cells() * self.n_az_cells() * self.n_doppler()
    }

    /// Velocity width of one Doppler channel.
    pub fn doppler_res(&self) -> f64 {
        self.v_u / self.n_pulses as f64
    }

    pub fn az_res_rad(&self) -> f64 {
        self.az_res_deg.to_radians()
    }

    pub fn gamma1(&self) -> f64 {
        -self.pfa1.ln()
    }

    /// Wraps a radial velocity into `[-v_u/2, v_u/2)`.
    pub fn wrap_velocity(&self, v: f64) -> f64 {
        wrap_velocity(v, self.v_u)
    }

    /// Doppler channel of a wrapped velocity.
    pub fn doppler_channel(&self, v: f64) -> usize {
        let n = self.n_doppler();
        let raw = ((v + self.v_u / 2.0) / self.v_u * n as f64).floor();
        raw.clamp(0.0, (n - 1) as f64) as usize
    }

    pub fn in_region(&self, r: f64, theta: f64) -> bool {
        let deg = theta.to_degrees();
        r >= self.r_min_m && r <= self.r_max_m && deg >= self.az_min_deg && deg <= self.az_max_deg
    }
}

pub fn wrap_velocity(v: f64, v_u: f64) -> f64 {
    let w = (v + v_u / 2.0).rem_euclid(v_u) - v_u / 2.0;
    // rem_euclid can round up to exactly v_u for tiny negative inputs
    if w >= v_u / 2.0 {
        w - v_u
    } else {
        w
    }
}
