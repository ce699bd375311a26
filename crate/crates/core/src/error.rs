use std::path::PathBuf;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time ordering violated: t1={t1} must precede t2={t2}")]
    Ordering { t1: f64, t2: f64 },

    #[error("missing data: {0}")]
    Missing(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("training diverged at epoch {epoch}: loss={loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("unsupported schema version {found} in {kind} (expected {expected})")]
    Version {
        kind: String,
        found: u32,
        expected: u32,
    },

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
