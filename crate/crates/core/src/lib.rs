//! Optimal-state quantum phase estimation with two live control qubits.
//!
//! The sine-window control state that minimises Holevo phase variance is a
//! sum of two product states, so every bipartite cut has Schmidt rank two.
//! That lets the state be prepared one qubit at a time with two-qubit gates,
//! interleaved with the semiclassical inverse QFT so that no more than two
//! control qubits are ever alive.
//!
//! Modules:
//! - [`statevec`]: tiny dense statevector engine with measurement and branching.
//! - [`sinestate`]: closed-form amplitudes, product decomposition, recursion
//!   coefficients and the two-qubit preparation gates.
//! - [`protocol`]: streaming measurement schedule, exact branch enumeration,
//!   canonical-POVM and dense inverse-QFT reference distributions, Monte Carlo.
//! - [`analysis`]: error densities and Holevo-variance statistics.
//! - [`verify`]: the invariant suite behind `optqpe verify`.
//! - [`cli`]: command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod par;
pub mod protocol;
pub mod sinestate;
pub mod statevec;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
