//! Noisy sampling of layered Clifford+rotation circuits under sparse
//! Pauli-Lindblad noise, and CVaR bounds that recover noise-free expectation
//! values from those samples.
//!
//! Bitstrings are `u128` with qubit 0 in the least significant bit; printed
//! labels put qubit 0 rightmost.

pub mod circuit;
pub mod cvar;
pub mod error;
pub mod noise;
pub mod pauli;
pub mod pec;
pub mod problems;
pub mod report;
pub mod rng;
pub mod sim;
pub mod state;

pub use circuit::{Gate1q, Layer, LayeredCircuit};
pub use error::{Error, Result};
pub use noise::{PauliLindbladModel, PerCnotNoise};
pub use pauli::{Pauli, PauliString};
pub use sim::{Distribution, SampleSet, Simulator};
