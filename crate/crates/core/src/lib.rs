//! Models and fitting kernels for a field-resilient fluxonium qubit.
//!
//! The crate is organised by physical subsystem:
//!
//! - [`numerics`]: dense symmetric eigensolver, Levenberg-Marquardt fitting,
//!   linear ODE propagation, Welch spectral estimation and seeded randomness.
//! - [`circuit`]: fluxonium energies, Hamiltonian in the oscillator basis,
//!   flux-dependent spectrum and the gradiometric loop network.
//! - [`field`]: superconducting gap suppression in magnetic field, ESR
//!   condition, thermal populations and misalignment compensation.
//! - [`noise`]: telegraph fluctuators, Lorentzian and 1/f spectra, spin
//!   freezing, Hahn-echo and Ramsey decay models and fits.
//! - [`tlsbath`]: qubit coupled to a ladder of long-lived TLSs, feedback
//!   stabilisation and hyperpolarisation fits.
//!
//! Units follow one convention throughout: energies and transition
//! frequencies in GHz (energy / h), fields in tesla, times in seconds, rates
//! in 1/s, and external flux in units of the flux quantum.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod constants;
mod error;
pub mod field;
pub mod io;
pub mod noise;
pub mod numerics;
pub mod tlsbath;

pub use error::{Error, Result};
