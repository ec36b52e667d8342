//! Simulation of ground-state virtual-photon conversion by STIRAP and their
//! continuous photodetection in an ultrastrongly coupled atom-resonator
//! system.
//!
//! * [`rabi`]: quantum Rabi Hamiltonian and its entangled ground state.
//! * [`lambda`]: four-level model, pulses and dissipators.
//! * [`mesolve`]: adaptive Lindblad integration.
//! * [`protocol`]: conversion/measurement cycles, limiting cycles, sweeps.
//! * [`config`] and [`cli`]: configuration documents and output artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod lambda;
pub mod linalg;
pub mod mesolve;
pub mod ode;
pub mod protocol;
pub mod rabi;

pub use error::{Error, Result};
