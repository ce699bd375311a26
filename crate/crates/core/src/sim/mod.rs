//! Radar scene simulation: targets, per-frame plots, patches and the
//! single-frame CA-CFAR baseline.
//!
//! Noise cells are unit-mean exponential; a target cell is the square-law
//! power of a fixed phasor plus unit complex Gaussian noise.

mod cfar;
mod config;
mod measure;
mod scenario;
pub mod stats;
mod types;

pub use cfar::ca_cfar;
pub use config::{wrap_velocity, RadarConfig};
pub use measure::{
    db_to_lin, generate_frame, measure_target, propagate_target, rician_power, simulate_window,
    snr_estimate_db, synthesize_rd_patch, threshold_from_pfa,
};
pub use scenario::{random_targets, ScenarioConfig};
pub use stats::cfar_alpha;
pub use types::{Observation, Origin, Patch, ScanWindow, TargetTruth};
