//! From edge probabilities to confirmed tracks.

mod calibrate;
mod detect;
mod score;
#[cfg(test)]
mod tests;

pub use calibrate::{calibrate_gamma2, false_track_scores, gamma2_from_scores, Gamma2Calibration, MIN_CALIBRATION_TRACKS};
pub use detect::{
    detect_tracks, edge_confidence, predict_edges, process_window, prune_tracks, track_order, Detection, TrackRecord,
    WindowResult,
};
pub use score::{rho, score_track, ScoreParams};
pub(crate) use score::{de_ext, ser_ext};
