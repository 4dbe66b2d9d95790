//! Simulation and parameter estimation for optically driven quantum-dot
//! electron spins in Faraday geometry.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`] holds the density-matrix types, the Lindblad generator, the
//!   adaptive integrator and the steady-state solver.
//! * [`models`] builds the concrete two-, three- and four-level models and the
//!   scalar quantities derived from them (cyclicity, g-factor, Q).
//! * [`raman`] is the closed-form Raman, light-shift, hole-mixing and
//!   waveplate algebra.
//! * [`ensemble`] averages over static Gaussian detuning ensembles.
//! * [`sequences`] turns pulse protocols into signal traces.
//! * [`fitting`] is the least-squares engine, its model library and spectral
//!   analysis.
//! * [`scenario`] parses scenario files and writes the CSV products used by
//!   the `fss` binary.
//!
//! Frequencies at the API boundary are ordinary frequencies (MHz or GHz),
//! rates are quoted as rate/2π in MHz, and times are in ns. Everything is
//! converted to angular units (rad/ns) internally; see [`units`].

// NaN must fail validation, so `!(x > 0.0)` is used instead of `x <= 0.0`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ensemble;
pub mod error;
pub mod fitting;
pub mod models;
pub mod quantum;
pub mod raman;
pub mod scenario;
pub mod sequences;
pub mod units;

pub use error::{Error, Result};
