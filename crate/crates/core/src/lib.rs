//! Numerical laboratory for Newtonian-gravity (Diósi-Penrose) decoherence
//! treated as a continuous quantum measurement.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`]: lattices, the mollified Newtonian kernel and its Mercer
//!   expansion, the convolutional square-root quadrature check, correlated
//!   noise fields.
//! * [`quantum_ops`]: finite Hilbert spaces, mass-density observables,
//!   collapse channels, Hamiltonians and the Lindblad generator.
//! * [`dynamics`]: master equation, diffusive (homodyne) and counting
//!   filters, measurement records.
//! * [`diagnostics`]: ensemble statistics, decoherence-rate fits, Born-rule
//!   and innovation whiteness tests.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod numeric;
pub mod quantum_ops;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
