//! Small dense network engine with hand-written backpropagation.
//!
//! Hidden layers use `tanh`, the output layer is linear. Used for the
//! matching-degree network and both value critics.

mod adam;
mod mlp;

pub use adam::{Adam, AdamSnapshot};
pub use mlp::{ForwardCache, GradientSet, Layer, Mlp, MlpSnapshot};
