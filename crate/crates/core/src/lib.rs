//! Supervised two-dimensional (image-as-matrix) dimensionality reduction with
//! repulsion tensors, the image-as-vector baselines, and nearest-neighbour
//! recognition on the projected data.

pub mod embed_1d;
pub mod embed_2d;
pub mod error;
pub mod graph;
pub mod recognizer;
pub mod spectral;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Tensor3, Tensor4};

/// Dense column-major real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
