use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, StandardNormal};

use super::config::RadarConfig;
use super::types::{Observation, Origin, Patch, ScanWindow, TargetTruth};
use crate::error::{Error, Result};

/// Power threshold passing unit-mean exponential noise with probability `pfa`.
pub fn threshold_from_pfa(pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa <= 1.0) {
        return Err(Error::domain(format!("pfa must lie in (0, 1], got {pfa}")));
    }
    Ok(-pfa.ln())
}

pub fn propagate_target(truth: &TargetTruth, dt: f64) -> TargetTruth {
    let [x, vx, y, vy] = truth.state;
    TargetTruth {
        id: truth.id,
        state: [x + vx * dt, vx, y + vy * dt, vy],
        snr_db: truth.snr_db,
    }
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// SNR estimate in dB from a noise-normalized cell power.
pub fn snr_estimate_db(power: f64) -> f64 {
    10.0 * (power - 1.0).max(1e-3).log10()
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    (a * std::f64::consts::FRAC_1_SQRT_2, b * std::f64::consts::FRAC_1_SQRT_2)
}

/// Square-law power of a unit-mean complex Gaussian plus a deterministic phasor of amplitude `a`.
pub fn rician_power<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    let (nr, ni) = complex_normal(rng);
    let re = a * phi.cos() + nr;
    let im = a * phi.sin() + ni;
    re * re + im * im
}

/// Measures a target whose state is already propagated to `t`.
///
/// Returns `None` when the target is outside the region or the cell power
/// does not exceed the primary threshold.
pub fn measure_target<R: Rng + ?Sized>(
    truth: &TargetTruth,
    t: f64,
    frame: usize,
    cfg: &RadarConfig,
    rng: &mut R,
) -> Option<Observation> {
    let r_true = truth.range();
    let th_true = truth.azimuth();
    if !cfg.in_region(r_true, th_true) {
        return None;
    }
    let snr = db_to_lin(truth.snr_db);
    let power = rician_power(snr.sqrt(), rng);
    if power <= cfg.gamma1() {
        return None;
    }
    Some(observe_detected(truth, t, frame, power, cfg, rng))
}

/// Measurement of a target whose detection has already been decided.
pub(crate) fn observe_detected<R: Rng + ?Sized>(
    truth: &TargetTruth,
    t: f64,
    frame: usize,
    power: f64,
    cfg: &RadarConfig,
    rng: &mut R,
) -> Observation {
    let snr = db_to_lin(truth.snr_db);
    let scale = cfg.noise_coeff / snr.sqrt();
    let mut noise = |sigma: f64| -> f64 {
        if sigma == 0.0 {
            0.0
        } else {
            sigma * rng.sample::<f64, _>(StandardNormal)
        }
    };
    let r = truth.range() + noise(scale * cfg.range_res_m);
    let theta = truth.azimuth() + noise(scale * cfg.az_res_rad());
    let v = cfg.wrap_velocity(truth.radial_velocity() + noise(scale * cfg.doppler_res()));
    let d = cfg.doppler_channel(v);
    let patch = synthesize_rd_patch(Some(truth.snr_db), v, power, cfg, rng);
    Observation {
        t,
        r,
        theta,
        v,
        d,
        s: snr_estimate_db(power),
        power,
        frame,
        patch,
        origin: Origin::Target(truth.id),
    }
}

/// Range-Doppler patch around a detection of power `power`.
///
/// With `snr_db = Some(_)`: slow-time tone at velocity `v` plus unit complex
/// noise, Doppler-transformed, range-weighted by a triangle peaking at the
/// center column. With `None`: unit-mean exponential cells. In both cases the
/// center cell of the detection channel equals `power`.
pub fn synthesize_rd_patch<R: Rng + ?Sized>(
    snr_db: Option<f64>,
    v: f64,
    power: f64,
    cfg: &RadarConfig,
    rng: &mut R,
) -> Patch {
    let n_d = cfg.n_doppler();
    let n_k = cfg.patch_range_cells;
    let center = n_k / 2;
    let d = cfg.doppler_channel(cfg.wrap_velocity(v));
    let mut data = vec![0.0; n_d * n_k];
    match snr_db {
        None => {
            for cell in data.iter_mut() {
                *cell = rng.sample::<f64, _>(Exp1);
            }
        }
        Some(db) => {
            let amp = db_to_lin(db).sqrt();
            let spectrum = tone_spectrum(cfg.wrap_velocity(v), cfg);
            for k in 0..n_k {
                let w = 1.0 - (k.abs_diff(center)) as f64 / (center as f64 + 1.0);
                for (row, &(sr, si)) in spectrum.iter().enumerate() {
                    let (nr, ni) = complex_normal(rng);
                    let re = amp * w * sr + nr;
                    let im = amp * w * si + ni;
                    data[row * n_k + k] = re * re + im * im;
                }
            }
        }
    }
    data[d * n_k + center] = power.max(0.0);
    Patch::from_raw(n_d, n_k, data)
}

/// Doppler spectrum of a slow-time tone at `v` with per-pulse amplitude `1/√N`,
/// under a `1/√N`-normalized DFT. An on-bin tone peaks at 1 in the channel of `v`.
fn tone_spectrum(v: f64, cfg: &RadarConfig) -> Vec<(f64, f64)> {
    let n = cfg.n_doppler();
    let nf = n as f64;
    let u = (v + cfg.v_u / 2.0) / cfg.v_u * nf - 0.5;
    let norm = 1.0 / nf;
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for m in 0..n {
                let ph = std::f64::consts::TAU * (u - k as f64) * m as f64 / nf;
                re += ph.cos();
                im += ph.sin();
            }
            (re * norm, im * norm)
        })
        .collect()
}

/// False-alarm plot drawn uniformly over the region's resolution cells.
fn false_alarm<R: Rng + ?Sized>(t: f64, frame: usize, cfg: &RadarConfig, rng: &mut R) -> Observation {
    let ir = rng.random_range(0..cfg.n_range_cells());
    let ia = rng.random_range(0..cfg.n_az_cells());
    let id = rng.random_range(0..cfg.n_doppler());
    let r = cfg.r_min_m + (ir as f64 + rng.random::<f64>()) * cfg.range_res_m;
    let theta = (cfg.az_min_deg + (ia as f64 + rng.random::<f64>()) * cfg.az_res_deg).to_radians();
    let dv = cfg.doppler_res();
    let mut v = -cfg.v_u / 2.0 + (id as f64 + rng.random::<f64>()) * dv;
    if cfg.doppler_channel(v) != id {
        // float rounding at the channel edge
        v = -cfg.v_u / 2.0 + (id as f64 + 0.5) * dv;
    }
    // exponential tail above γ1 is again exponential
    let power = cfg.gamma1() + rng.sample::<f64, _>(Exp1);
    let patch = synthesize_rd_patch(None, v, power, cfg, rng);
    Observation {
        t,
        r,
        theta,
        v,
        d: id,
        s: snr_estimate_db(power),
        power,
        frame,
        patch,
        origin: Origin::Noise,
    }
}

/// All plots of one frame: detected targets first, then false alarms.
pub fn generate_frame<R: Rng + ?Sized>(
    truths: &[TargetTruth],
    t: f64,
    frame: usize,
    cfg: &RadarConfig,
    rng: &mut R,
) -> Result<Vec<Observation>> {
    let mut out: Vec<Observation> = truths
        .iter()
        .filter_map(|tr| measure_target(tr, t, frame, cfg, rng))
        .collect();
    let n_fa = if cfg.pfa1 > 0.0 {
        Binomial::new(cfg.n_cells() as u64, cfg.pfa1)
            .map_err(|e| Error::config(format!("false-alarm binomial: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    out.extend((0..n_fa).map(|_| false_alarm(t, frame, cfg, rng)));
    Ok(out)
}

/// Simulates `n_frames` frames starting at `t0`; `truths` hold states at `t0`.
pub fn simulate_window<R: Rng + ?Sized>(
    truths: &[TargetTruth],
    t0: f64,
    n_frames: usize,
    cfg: &RadarConfig,
    rng: &mut R,
) -> Result<ScanWindow> {
    cfg.validate()?;
    let mut frames = Vec::with_capacity(n_frames);
    let mut times = Vec::with_capacity(n_frames);
    for n in 0..n_frames {
        let dt = n as f64 * cfg.frame_period_s;
        let t = t0 + dt;
        let moved: Vec<TargetTruth> = truths.iter().map(|tr| propagate_target(tr, dt)).collect();
        frames.push(generate_frame(&moved, t, n, cfg, rng)?);
        times.push(t);
    }
    Ok(ScanWindow { frames, times, truths: truths.to_vec() })
}
