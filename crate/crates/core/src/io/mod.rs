//! Versioned JSON artifacts, run configuration and CSV tables.

mod checkpoint;
mod config;
mod envelope;
mod tables;

pub use checkpoint::{Checkpoint, Encoding, StoredArray};
pub use config::{CalibrationConfig, DatasetConfig, PathsConfig, RunConfig};
pub use envelope::{config_hash, load, save, write_atomic, Envelope, SCHEMA_VERSION};
pub use tables::{write_boxplot_csv, write_curves_csv, write_loss_csv};

/// Envelope kinds.
pub mod kind {
    pub const WINDOW: &str = "window";
    pub const GRAPHS: &str = "graphs";
    pub const CHECKPOINT: &str = "checkpoint";
    pub const CALIBRATION: &str = "calibration";
    pub const REPORT: &str = "report";
    pub const IMPORTANCE: &str = "importance";
    pub const TRACKS: &str = "tracks";
}
