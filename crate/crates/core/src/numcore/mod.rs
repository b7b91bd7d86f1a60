//! Numeric core: dense `f64` tensors, a reverse-mode gradient tape, Adam, and
//! seeded initialisation helpers.
//!
//! A [`Graph`] is rebuilt for every optimisation step: parameters are copied in
//! as leaves, the forward pass records operations, [`Graph::backward`] walks the
//! tape in reverse, and [`Adam::step`] consumes the leaf gradients.

mod adam;
mod graph;
pub(crate) mod kernels;
mod rng;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use graph::{Graph, Var};
pub use rng::{derive_seed, glorot_uniform, seeded_rng, uniform, SeedRng};
pub use tensor::Tensor;
