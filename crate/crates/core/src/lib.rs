//! Simulation and analysis toolkit for a photonic graph-state resource that
//! encodes one qubit into the [[4,1,2]] box-cluster code.

pub mod code412;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernel;
pub mod noise;
pub mod pauli;
pub mod pipeline;
pub mod sampling;
mod serde_matrix;
pub mod svg;
pub mod tomography;
pub mod witness;

pub use error::{Error, Result};
