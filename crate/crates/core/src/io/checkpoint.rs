use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelDims, ModelParams, Variant};
use crate::tensor::Array;
use crate::train::TrainReport;

/// How parameter values are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Shortest round-trip decimal numbers.
    #[default]
    Decimal,
    /// Little-endian 64-bit floats in standard base64.
    Base64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub encoding: Encoding,
    pub data: serde_json::Value,
}

impl StoredArray {
    pub fn encode(name: &str, a: &Array, encoding: Encoding) -> Self {
        let data = match encoding {
            Encoding::Decimal => serde_json::json!(a.data()),
            Encoding::Base64 => {
                let bytes: Vec<u8> = a.data().iter().flat_map(|v| v.to_le_bytes()).collect();
                serde_json::Value::String(STANDARD.encode(bytes))
            }
        };
        Self { name: name.to_string(), shape: a.shape().to_vec(), encoding, data }
    }

    pub fn decode(&self) -> Result<Array> {
        let bad = |msg: String| Error::config(format!("parameter {}: {msg}", self.name));
        let values: Vec<f64> = match self.encoding {
            Encoding::Decimal => serde_json::from_value(self.data.clone()).map_err(|e| bad(e.to_string()))?,
            Encoding::Base64 => {
                let text = self.data.as_str().ok_or_else(|| bad("base64 data must be a string".into()))?;
                let bytes = STANDARD.decode(text).map_err(|e| bad(e.to_string()))?;
                if bytes.len() % 8 != 0 {
                    return Err(bad("base64 payload is not a whole number of f64 values".into()));
                }
                bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
            }
        };
        Array::new(self.shape.clone(), values)
    }
}

/// Trained network with its architecture and optional training report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub dims: ModelDims,
    pub variant: Variant,
    pub params: Vec<StoredArray>,
    pub report: Option<TrainReport>,
}

impl Checkpoint {
    pub fn new(model: &Model, report: Option<TrainReport>, encoding: Encoding) -> Self {
        Self {
            dims: model.dims.clone(),
            variant: model.variant,
            params: model
                .params
                .names
                .iter()
                .zip(&model.params.arrays)
                .map(|(n, a)| StoredArray::encode(n, a, encoding))
                .collect(),
            report,
        }
    }

    pub fn model(&self) -> Result<Model> {
        let params = ModelParams {
            names: self.params.iter().map(|p| p.name.clone()).collect(),
            arrays: self.params.iter().map(StoredArray::decode).collect::<Result<_>>()?,
        };
        Model::from_params(self.dims.clone(), self.variant, params)
    }
}
