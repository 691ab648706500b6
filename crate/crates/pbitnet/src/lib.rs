//! Quantum gates on classical stochastic spiking networks.
//!
//! A qubit is encoded as the joint distribution of a pair of random binary
//! variables (pbits) through a fixed 4-outcome POVM.  Unitary gates become
//! stochastic matrices on the distribution simplex, and small integrate-and-fire
//! circuits realize them on spike trains: 1-qubit rotations and the CNOT gate.
//!
//! Layout:
//! - [`qubit`]: density matrices in the Pauli coefficient basis, unitaries, and
//!   the induced transfer matrices.
//! - [`povm`]: the POVM, state ↔ distribution maps, gate operators, and the
//!   metric-side figures of merit (coherence `R`, fidelity `F`, unitary error `α`).
//! - [`snn`]: the discrete-time stochastic integrate-and-fire engine on a
//!   delayed weighted multigraph.
//! - [`circuits`]: wiring of the 1-qubit gate and CNOT circuits from the
//!   published weight matrices and feedback rules.
//! - [`experiments`]: test-state catalogs, trial/sweep protocols, and the η
//!   optimization harness.

pub mod circuits;
pub mod error;
pub mod experiments;
pub mod povm;
pub mod qubit;
pub mod snn;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
