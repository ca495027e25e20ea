//! Statevector simulation of a quantum bagging ensemble.
//!
//! A `d`-qubit control register entangles `2^d` permuted copies of a qubit-encoded
//! training set; a single swap-test cosine classifier then evaluates every copy at once,
//! and one readout of the prediction qubit yields the ensemble average.
//!
//! - [`qsim`]: dense statevector simulator
//! - [`encoding`]: qubit encoding of 2-D vectors, datasets, register layout
//! - [`classifier`]: swap-test cosine classifier
//! - [`ensemble`]: sampling stage, full-circuit and per-trajectory ensembles
//! - [`oracle`]: classical formulas and dense-matrix reference states
//! - [`bench`]: Gaussian benchmarks and metrics

pub mod bench;
pub mod classifier;
pub mod encoding;
pub mod ensemble;
pub mod error;
pub mod oracle;
pub mod qsim;
pub mod seed;

pub use error::{Error, Result};
