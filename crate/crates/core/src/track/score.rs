use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Edge-confidence weights, length bonus and thresholds for track scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreParams {
    /// Weights of the FF, TF and TT probabilities.
    pub alpha: [f64; 3],
    /// Bonus per node.
    pub lambda: f64,
    /// Final threshold on the track score; `"-inf"` and `"inf"` are accepted.
    #[serde(serialize_with = "ser_ext", deserialize_with = "de_ext")]
    pub gamma2: f64,
    /// Edges with confidence below this are dropped before enumeration.
    pub edge_gate_eps: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self { alpha: [0.0, 0.2, 1.0], lambda: 0.01, gamma2: 0.5, edge_gate_eps: 0.1 }
    }
}

impl ScoreParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(*a >= 0.0)) || !(self.lambda >= 0.0) {
            return Err(Error::config("score: alpha weights and lambda must be non-negative"));
        }
        if self.gamma2.is_nan() || self.edge_gate_eps.is_nan() {
            return Err(Error::config("score: gamma2 and edge_gate_eps must be numbers"));
        }
        Ok(())
    }

    pub fn with_gamma2(&self, gamma2: f64) -> Self {
        Self { gamma2, ..self.clone() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Ext {
    Num(f64),
    Tag(String),
}

pub(crate) fn ser_ext<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match *v {
        x if x == f64::INFINITY => s.serialize_str("inf"),
        x if x == f64::NEG_INFINITY => s.serialize_str("-inf"),
        x => s.serialize_f64(x),
    }
}

pub(crate) fn de_ext<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match Ext::deserialize(d)? {
        Ext::Num(x) => Ok(x),
        Ext::Tag(t) if t == "inf" => Ok(f64::INFINITY),
        Ext::Tag(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
        Ext::Tag(t) => Err(serde::de::Error::custom(format!("expected a number, \"inf\" or \"-inf\", got {t:?}"))),
    }
}

/// `α · ŷ` for one edge.
pub fn rho(p: &[f64; 3], sp: &ScoreParams) -> f64 {
    sp.alpha[0] * p[0] + sp.alpha[1] * p[1] + sp.alpha[2] * p[2]
}

/// Mean edge confidence plus `λ` per node.
pub fn score_track(rho: &[f64], n_nodes: usize, sp: &ScoreParams) -> Result<f64> {
    if rho.is_empty() {
        return Err(Error::domain("a scored track needs at least one edge"));
    }
    Ok(rho.iter().sum::<f64>() / rho.len() as f64 + sp.lambda * n_nodes as f64)
}
