//! Truncated Fock-space simulation of lossy linear-optical circuits.
//!
//! The crate models two-photon interference in balanced couplers and
//! Mach-Zehnder interferometers driven by spontaneous parametric
//! down-conversion sources:
//!
//! - [`fock`]: multimode Fock bases, lifted scattering operators, density
//!   matrices, partial traces and loss channels (ancilla modes that start in
//!   vacuum and are traced out immediately).
//! - [`elements`]: scattering matrices for ideal and lossy MMI couplers, phase
//!   shifters and MZIs, plus the internal-phase feasibility bound.
//! - [`source`]: two-mode squeezed sources and threshold-detector statistics.
//! - [`experiments`]: HOM visibility, delay scans, visibility against pair
//!   probability and fringe scans.
//! - [`calibration`]: efficiency/squeezing fits from count rates, overlap fits
//!   and nominal-visibility extrapolation.
//! - [`acceptance`]: the numbered end-to-end checks run by the test suite and
//!   by `siphon selftest`.

pub mod acceptance;
pub mod calibration;
pub mod elements;
mod error;
pub mod experiments;
pub mod fock;
pub mod presets;
pub mod source;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Default truncation: at most this many photon pairs per pulse.
pub const DEFAULT_N_MAX_PAIRS: usize = 9;

/// Pulsed pump repetition rate in Hz.
pub const DEFAULT_REPETITION_RATE: f64 = 8.0e7;
