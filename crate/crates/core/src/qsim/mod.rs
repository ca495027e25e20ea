//! Minimal dense statevector simulator.
//!
//! Gates are applied in place by visiting the amplitude pairs (or quadruples) that
//! differ only in the target bits, skipping indices whose control bits do not match.
//! No full-register matrix is ever built here; [`crate::oracle`] does that for tests.

mod circuit;
mod gate;
mod state;

pub use circuit::{Block, Circuit};
pub use gate::{Control, Gate, GateOp, Matrix2, Matrix4, UNITARY_TOLERANCE};
pub use state::{ShotResult, StateVector, MAX_QUBITS, NORM_TOLERANCE};
