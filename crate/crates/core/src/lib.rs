//! Simulation and analysis toolkit for echoes in a single kicked Kerr-nonlinear
//! oscillator.
//!
//! Energies are measured in units of the Kerr constant and time in units of
//! its inverse. The Hamiltonian is
//!
//! ```text
//! H = Δ a†a + a†² a² + E₀ f(t) (a† + a)
//! ```
//!
//! in the frame rotating at the drive carrier frequency. Quantum revivals occur
//! at multiples of `T_rev = π`.
//!
//! The crate is organised by physical subsystem:
//!
//! * [`fock`]: truncated Fock-space states and the displacement operator.
//! * [`dynamics`]: exact free evolution and integration through pulses and kicks.
//! * [`analytic`]: closed-form and perturbative expressions for `⟨q̂⟩(t)`.
//! * [`classical`]: Monte Carlo ensemble of classical Kerr oscillators.
//! * [`open_system`]: Lindblad master equation for the reduced density matrix.
//! * [`analysis`]: Husimi Q-distribution and echo detection in time series.
//! * [`scaling`]: perturbative-order scaling of echo amplitudes with kick strength.

pub mod analysis;
pub mod analytic;
pub mod classical;
pub mod dynamics;
mod error;
pub mod fock;
pub mod open_system;
pub mod scaling;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Quantum revival period in dimensionless time.
pub const T_REV: f64 = std::f64::consts::PI;

/// Crate version, recorded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
