//! Multi-frame radar detection by link prediction on association graphs.
//!
//! Validation rejects NaN through negated comparisons (`!(x > 0.0)`), so
//! that clippy lint is off crate-wide.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sim;
pub mod tensor;
pub mod track;
pub mod train;

pub use error::{Error, Result};
