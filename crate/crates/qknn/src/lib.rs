//! Quantum k-nearest-neighbors over amplitude-encoded Euclidean distances.
//!
//! The pipeline: normalize a dataset into a radius-1/2 ball, amplitude-encode every
//! (training row, test row) pair into one superposed register, run a three-gate
//! Bell-H circuit, and read squared distances back out of the joint distribution of
//! the first qubit and the index register, either exactly or through seeded
//! finite-shot sampling. A stratified cross-validation harness scores the resulting
//! k-NN ranking against its classical counterpart.

pub mod circuit;
pub mod dataset;
pub mod encode;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod knn;
pub mod preprocess;

pub use error::{Error, Result};
