use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{McConfig, OspaParams};
use crate::graph::GraphConfig;
use crate::model::ModelDims;
use crate::sim::{RadarConfig, ScenarioConfig};
use crate::track::ScoreParams;
use crate::train::TrainHyper;

/// Size and SNR mix of the synthetic training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_graphs: usize,
    pub snr_db: Vec<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n_graphs: 500, snr_db: vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0] }
    }
}

/// Settings of the threshold and cutoff calibrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Target false tracks per detection cell.
    pub pfa2: f64,
    /// Target-free windows for `gamma2` and `gamma_nci`.
    pub false_track_trials: usize,
    pub kappa_trials: usize,
    pub kappa_quantile: f64,
    /// Cutoff over the worst-axis position noise std at the reference SNR.
    pub eta_factor: f64,
    pub snr_ref_db: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            pfa2: 1e-5,
            false_track_trials: 1000,
            kappa_trials: 500,
            kappa_quantile: 0.99,
            eta_factor: 5.0,
            snr_ref_db: 10.0,
        }
    }
}

/// Optional default locations for artifacts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Every setting of a run; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub radar: RadarConfig,
    pub graph: GraphConfig,
    pub scenario: ScenarioConfig,
    pub dataset: DatasetConfig,
    pub dims: ModelDims,
    pub hyper: TrainHyper,
    pub score: ScoreParams,
    pub ospa: OspaParams,
    pub calibration: CalibrationConfig,
    pub mc: McConfig,
    pub seed: u64,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.graph.validate()?;
        self.scenario.validate()?;
        self.dims.validate()?;
        self.hyper.validate()?;
        self.score.validate()?;
        self.ospa.validate()?;
        self.mc.validate()?;
        if self.dims.input != crate::train::input_spec(&self.radar) {
            return Err(Error::config("dims.input must match the radar's Doppler channels, patch width and v_u"));
        }
        if self.dataset.snr_db.is_empty() {
            return Err(Error::config("dataset.snr_db is empty"));
        }
        let c = &self.calibration;
        if !(c.pfa2 > 0.0 && c.pfa2 < 1.0) || !(c.kappa_quantile > 0.0 && c.kappa_quantile <= 1.0) || !(c.eta_factor > 0.0) {
            return Err(Error::config("calibration: need 0 < pfa2 < 1, 0 < kappa_quantile <= 1 and eta_factor > 0"));
        }
        Ok(())
    }

    /// Reads and validates a JSON configuration file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let cfg: Self = serde_json::from_slice(&text).map_err(|source| Error::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn hash(&self) -> Result<String> {
        super::config_hash(self)
    }
}
