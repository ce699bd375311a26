//! End-to-end steps shared by the command line and the test suites.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{
    calibrate_gamma_nci, calibrate_kappa, eta_from_radar, monte_carlo_curves, Detectors, EvalReport, KappaCalibration,
    NciParams, OspaParams,
};
use crate::io::RunConfig;
use crate::model::Model;
use crate::track::{calibrate_gamma2, Gamma2Calibration, ScoreParams};

/// Thresholds and cutoffs fixed before evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Scoring with the calibrated `gamma2`.
    pub score: ScoreParams,
    /// Gates with the calibrated `gamma_nci`.
    pub nci: NciParams,
    /// Cutoff and calibrated `kappa`.
    pub ospa: OspaParams,
    pub gamma2: Gamma2Calibration,
    pub gamma_nci: Gamma2Calibration,
    pub kappa: KappaCalibration,
}

impl Calibration {
    pub fn detectors<'a>(&'a self, model: &'a Model) -> Detectors<'a> {
        Detectors {
            model,
            score: &self.score,
            nci: &self.nci,
            ospa: &self.ospa,
            pfa2: self.gamma2.target_pfa2,
            achieved: [self.gamma2.achieved_pfa2, self.gamma_nci.achieved_pfa2],
        }
    }
}

/// Calibrates `eta`, `kappa`, `gamma2` and `gamma_nci` from `cfg.calibration`.
pub fn calibrate(model: &Model, cfg: &RunConfig, seed: u64) -> Result<Calibration> {
    let c = &cfg.calibration;
    let r_ref = 0.5 * (cfg.radar.r_min_m + cfg.radar.r_max_m);
    let eta = eta_from_radar(&cfg.radar, r_ref, c.snr_ref_db, c.eta_factor);
    let mut ospa = OspaParams { eta, ..cfg.ospa.clone() };
    let kappa = calibrate_kappa(&cfg.radar, &cfg.graph, &cfg.scenario, &ospa, c.kappa_trials, c.kappa_quantile, seed)?;
    ospa.kappa = kappa.kappa;
    log::info!("eta {eta:.1} m, kappa {:.4}", kappa.kappa);

    let gamma2 = calibrate_gamma2(model, &cfg.radar, &cfg.graph, &cfg.score, c.pfa2, c.false_track_trials, seed)?;
    log::info!("gamma2 {} ({} false tracks over {} cells)", gamma2.gamma2, gamma2.n_false, gamma2.n_cells);
    let gates = NciParams::from_radar(&cfg.radar, c.snr_ref_db);
    let gamma_nci = calibrate_gamma_nci(&cfg.radar, &cfg.graph, &gates, c.pfa2, c.false_track_trials, seed)?;
    log::info!("gamma_nci {}", gamma_nci.gamma2);
    Ok(Calibration {
        score: cfg.score.with_gamma2(gamma2.gamma2),
        nci: NciParams { gamma_nci: gamma_nci.gamma2, ..gates },
        ospa,
        gamma2,
        gamma_nci,
        kappa,
    })
}

/// Monte-Carlo detection curves under `cfg.mc` with calibrated detectors.
pub fn evaluate(model: &Model, cfg: &RunConfig, cal: &Calibration, seed: u64) -> Result<EvalReport> {
    monte_carlo_curves(&cfg.radar, &cfg.graph, &cfg.mc, &cal.detectors(model), seed)
}
