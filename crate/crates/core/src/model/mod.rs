//! The link-prediction network.
//!
//! Nodes are embedded from four inputs (Doppler channel, SNR, frame code,
//! range-Doppler patch), refined by attention message passing whose logits
//! and messages see the edge residuals, and each edge is classified into
//! FF / TF / TT from its two end nodes plus its own features.
//!
//! No bias terms appear in the message-passing layers.

mod batch;
mod dims;
mod input;
mod net;

pub use batch::Batch;
pub use dims::{encode_temporal, InputSpec, ModelDims, ParamCount, Variant};
pub use input::GraphInput;
pub use net::{Forward, Model, ModelParams};
