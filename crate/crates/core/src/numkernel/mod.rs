//! Dense matrices, a seeded generator, activations and a least-squares solver.

mod activation;
mod matrix;
mod rng;
mod solve;

pub use activation::{activate, sigmoid, Activation};
pub use matrix::{matmul, Matrix};
pub use rng::RngState;
pub use solve::least_squares;
