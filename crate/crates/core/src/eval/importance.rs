use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GraphInput, Model};
use crate::rng::substream;
use crate::train::{confusion_and_accuracy, Confusion};

/// Network input that can be permuted across the evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Feature {
    /// Node SNR estimate.
    Snr,
    /// Node Doppler channel.
    Dc,
    /// Node frame code.
    Ci,
    /// Node range-Doppler patch.
    Rdm,
    /// Edge velocity residual pair.
    Stc,
    /// Edge Doppler channel difference.
    Dcd,
}

impl Feature {
    pub const ALL: [Feature; 6] = [Feature::Snr, Feature::Dc, Feature::Ci, Feature::Rdm, Feature::Stc, Feature::Dcd];

    pub fn tag(self) -> &'static str {
        match self {
            Feature::Snr => "SNR",
            Feature::Dc => "DC",
            Feature::Ci => "CI",
            Feature::Rdm => "RDM",
            Feature::Stc => "STC",
            Feature::Dcd => "DCD",
        }
    }

    pub fn is_edge(self) -> bool {
        matches!(self, Feature::Stc | Feature::Dcd)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown feature {s:?}; expected one of SNR, DC, CI, RDM, STC, DCD")))
    }
}

fn field(g: &mut GraphInput, feature: Feature) -> (&mut Vec<f64>, usize) {
    let cells = g.patch_hw.0 * g.patch_hw.1;
    match feature {
        Feature::Snr => (&mut g.s, 1),
        Feature::Dc => (&mut g.d, 1),
        Feature::Ci => (&mut g.bits, 4),
        Feature::Rdm => (&mut g.patch, cells),
        Feature::Stc => (&mut g.e, 2),
        Feature::Dcd => (&mut g.dcd, 1),
    }
}

/// Number of permutable units (nodes or edges) in `graphs`.
pub fn unit_count(graphs: &[GraphInput], feature: Feature) -> usize {
    graphs
        .iter()
        .map(|g| if feature.is_edge() { g.n_edges() } else { g.n_nodes })
        .sum()
}

/// Copy of `graphs` where unit `k` (in graph-major order) takes the feature value of unit `perm[k]`.
pub fn permute_feature(graphs: &[GraphInput], feature: Feature, perm: &[usize]) -> Result<Vec<GraphInput>> {
    let n = unit_count(graphs, feature);
    if perm.len() != n {
        return Err(Error::shape("permute_feature", &[n], &[perm.len()]));
    }
    let mut pool: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut out = graphs.to_vec();
    for g in &mut out {
        let (v, width) = field(g, feature);
        pool.extend(v.chunks(width).map(<[f64]>::to_vec));
    }
    let mut k = 0;
    for g in &mut out {
        let (v, width) = field(g, feature);
        for unit in v.chunks_mut(width) {
            unit.copy_from_slice(&pool[perm[k]]);
            k += 1;
        }
    }
    Ok(out)
}

/// Quartiles, 1.5·IQR whiskers and the points beyond them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("box statistics need at least one number"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v)).collect();
    Ok(BoxStats {
        q1,
        median,
        q3,
        lo_whisker: inside.first().copied().unwrap_or(q1),
        hi_whisker: inside.last().copied().unwrap_or(q3),
        outliers: s.into_iter().filter(|v| !(lo_fence..=hi_fence).contains(v)).collect(),
    })
}

/// Accuracy drops from permuting one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: Feature,
    /// True class the accuracy is restricted to, if any.
    pub class_context: Option<usize>,
    pub base_accuracy: f64,
    pub drops: Vec<f64>,
    pub stats: BoxStats,
}

fn context_accuracy(cm: &Confusion, class: Option<usize>) -> f64 {
    match class {
        Some(c) => cm.class_accuracy(c),
        None => cm.accuracy(),
    }
}

/// Accuracy of `model` on `graphs` after applying `perm` to `feature`.
pub fn permuted_accuracy(
    model: &Model,
    graphs: &[GraphInput],
    feature: Feature,
    perm: &[usize],
    class: Option<usize>,
) -> Result<f64> {
    let shuffled = permute_feature(graphs, feature, perm)?;
    Ok(context_accuracy(&confusion_and_accuracy(model, &shuffled, None)?, class))
}

/// Drop in (optionally class-restricted) edge accuracy over `n_repeats`
/// random permutations; repeat `k` draws from substream `("importance:<tag>", k)`.
pub fn permutation_importance(
    model: &Model,
    graphs: &[GraphInput],
    feature: Feature,
    class: Option<usize>,
    n_repeats: usize,
    seed: u64,
) -> Result<Importance> {
    if n_repeats == 0 {
        return Err(Error::domain("importance needs at least one repeat"));
    }
    if class.is_some_and(|c| c > 2) {
        return Err(Error::domain("class context must be 0, 1 or 2"));
    }
    let base = context_accuracy(&confusion_and_accuracy(model, graphs, None)?, class);
    let n = unit_count(graphs, feature);
    let stream = format!("importance:{}", feature.tag());
    let mut drops = Vec::with_capacity(n_repeats);
    for k in 0..n_repeats {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut substream(seed, &stream, k as u64));
        drops.push(base - permuted_accuracy(model, graphs, feature, &perm, class)?);
    }
    let stats = box_stats(&drops)?;
    Ok(Importance { feature, class_context: class, base_accuracy: base, drops, stats })
}
