//! Quantum Otto engine whose working substance is the finite-size Dicke–Stark
//! model.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectrum`] builds and diagonalises the Hamiltonian in the extended
//!   coherent (displaced-oscillator) basis and converts eigenvectors into a
//!   bare Fock ⊗ spin representation.
//! * [`thermostatics`] evaluates the quasistatic (infinite-time) cycle from
//!   Gibbs populations, classifies operating modes and runs parameter sweeps.
//! * [`dynamics`] implements the dressed Lindblad master equation and the
//!   state functionals (relative entropy, fidelity, entropy).
//! * [`engine`] orchestrates the finite-time four-stroke cycle.
//!
//! Energies, temperatures and times are measured in units of the reference
//! boson frequency (ħ = k_B = 1).

pub mod dynamics;
pub mod engine;
mod error;
pub mod linalg;
pub mod spectrum;
pub mod thermostatics;

pub use error::{Error, Result};
pub use spectrum::{BasisConfig, ModelParams, Spectrum};
