//! Track correctness, Monte-Carlo detection curves, baselines and
//! permutation importance.

mod correct;
mod curves;
mod importance;
mod nci;
mod ospa;
mod smooth;
#[cfg(test)]
mod tests;

pub use correct::{
    attributed_target, calibrate_kappa, eta_from_radar, is_correct_detection, nearest_rank, pd_upper_bound,
    target_plots, track_distance, truth_position, KappaCalibration,
};
pub use curves::{
    cfar_trial, monte_carlo_curves, sub_window, BoundException, CurveRow, Detectors, EvalReport, McConfig, CFAR, GLP,
    NCI, UPB,
};
pub use importance::{
    box_stats, permutation_importance, permute_feature, permuted_accuracy, unit_count, BoxStats, Feature, Importance,
};
pub use nci::{baseline_gated_nci, calibrate_gamma_nci, nci_detect, NciParams};
pub use ospa::{hungarian, ospa, OspaParams};
pub use smooth::smooth_track;
