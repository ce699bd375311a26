//! Dense arrays, reverse-mode differentiation and the Adam optimizer.

mod adam;
mod array;
mod gradcheck;
mod tape;

pub use adam::{adam_step, AdamState};
pub use array::Array;
pub use gradcheck::grad_check;
pub use tape::{Conv2dSpec, Gradients, Tape, Var};
