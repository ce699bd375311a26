use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Constant-velocity target state `[x, ẋ, y, ẏ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub id: u32,
    pub state: [f64; 4],
    pub snr_db: f64,
}

impl TargetTruth {
    pub fn position(&self) -> (f64, f64) {
        (self.state[0], self.state[2])
    }

    pub fn speed(&self) -> f64 {
        self.state[1].hypot(self.state[3])
    }

    pub fn range(&self) -> f64 {
        self.state[0].hypot(self.state[2])
    }

    /// Azimuth measured from the x axis.
    pub fn azimuth(&self) -> f64 {
        self.state[2].atan2(self.state[0])
    }

    /// Unwrapped radial velocity.
    pub fn radial_velocity(&self) -> f64 {
        let r = self.range();
        if r == 0.0 {
            return 0.0;
        }
        (self.state[1] * self.state[0] + self.state[3] * self.state[2]) / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Noise,
    Target(u32),
}

impl Origin {
    pub fn target(self) -> Option<u32> {
        match self {
            Origin::Target(id) => Some(id),
            Origin::Noise => None,
        }
    }

    pub fn is_target(self) -> bool {
        matches!(self, Origin::Target(_))
    }
}

/// Range-Doppler power patch, Doppler-major (`n_doppler` rows × `n_range` columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    n_doppler: usize,
    n_range: usize,
    data: Vec<f64>,
}

impl Patch {
    pub fn new(n_doppler: usize, n_range: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_doppler * n_range {
            return Err(Error::shape("Patch::new", &[n_doppler, n_range], &[data.len()]));
        }
        if data.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("patch values must be finite and non-negative"));
        }
        Ok(Self { n_doppler, n_range, data })
    }

    pub(crate) fn from_raw(n_doppler: usize, n_range: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_doppler * n_range);
        Self { n_doppler, n_range, data }
    }

    pub fn n_doppler(&self) -> usize {
        self.n_doppler
    }

    pub fn n_range(&self) -> usize {
        self.n_range
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, d: usize, k: usize) -> f64 {
        self.data[d * self.n_range + k]
    }

    pub fn center_col(&self) -> usize {
        self.n_range / 2
    }

    /// Doppler row holding the largest value of the center range column.
    pub fn argmax_doppler(&self) -> usize {
        let c = self.center_col();
        (0..self.n_doppler)
            .max_by(|&a, &b| self.get(a, c).total_cmp(&self.get(b, c)))
            .unwrap_or(0)
    }
}

impl Serialize for Patch {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = self.data.chunks(self.n_range.max(1)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Patch {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n_range = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_range) {
            return Err(serde::de::Error::custom("ragged patch rows"));
        }
        let n_doppler = rows.len();
        Patch::new(n_doppler, n_range, rows.concat()).map_err(serde::de::Error::custom)
    }
}

/// One primary-threshold plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    /// Wrapped radial velocity in `[-v_u/2, v_u/2)`.
    pub v: f64,
    pub d: usize,
    /// SNR estimate in dB.
    pub s: f64,
    /// Linear detection-cell power (noise-normalized).
    pub power: f64,
    /// Frame index within the window.
    pub frame: usize,
    pub patch: Patch,
    pub origin: Origin,
}

impl Observation {
    pub fn cartesian(&self) -> (f64, f64) {
        (self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

/// `L` consecutive frames of plots plus the truths present in the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub frames: Vec<Vec<Observation>>,
    /// Frame times, strictly increasing.
    pub times: Vec<f64>,
    /// Truth states at the first frame time.
    pub truths: Vec<TargetTruth>,
}

impl ScanWindow {
    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.times.len() {
            return Err(Error::shape("ScanWindow", &[self.frames.len()], &[self.times.len()]));
        }
        for w in self.times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Ordering { t1: w[0], t2: w[1] });
            }
        }
        for (n, frame) in self.frames.iter().enumerate() {
            if let Some(z) = frame.iter().find(|z| z.frame != n || z.t != self.times[n]) {
                return Err(Error::domain(format!(
                    "observation in list {n} carries frame {} at t={}",
                    z.frame, z.t
                )));
            }
        }
        Ok(())
    }

    pub fn n_observations(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    /// Observations flattened in frame order.
    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.frames.iter().flatten()
    }
}
