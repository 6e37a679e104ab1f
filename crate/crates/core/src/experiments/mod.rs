//! End-to-end experiment drivers: HOM dips, visibility against pair
//! probability, and single- and two-photon MZI fringes.
//!
//! Grid evaluations are independent and run in parallel; results are always
//! returned in grid order.

mod circuit;
mod fringe;
mod hom;

use serde::{Deserialize, Serialize};

use crate::error::unit_closed;
use crate::{Error, Result};

pub use circuit::{loss_beamsplitter, Circuit};
pub use fringe::{
    dominant_period, exceeds_visibility_threshold, fringe_visibility, single_photon_fringe, single_photon_reference,
    squeezed_fringe_point, two_photon_fringe, two_photon_reference, FringePoint, SqueezedFringePoint,
    VISIBILITY_THRESHOLD,
};
pub use hom::{
    hom_delay_scan, mixture_visibility, visibility, visibility_vs_pair_probability, DelayPoint, DelayScan,
    HomExperiment, HomProbabilities, PairSource, VisibilityPoint,
};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space coherence length of the photons, m.
pub const DEFAULT_COHERENCE_LENGTH: f64 = 100e-6;

/// Transmissions of the virtual beamsplitters at the inputs (`a`, `b`) and
/// outputs (`c`, `d`) of the coupler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossChannelSet {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_c: f64,
    pub eta_d: f64,
}

impl LossChannelSet {
    pub fn new(eta_a: f64, eta_b: f64, eta_c: f64, eta_d: f64) -> Result<Self> {
        Ok(Self {
            eta_a: unit_closed("eta_a", eta_a)?,
            eta_b: unit_closed("eta_b", eta_b)?,
            eta_c: unit_closed("eta_c", eta_c)?,
            eta_d: unit_closed("eta_d", eta_d)?,
        })
    }

    pub fn lossless() -> Self {
        Self {
            eta_a: 1.0,
            eta_b: 1.0,
            eta_c: 1.0,
            eta_d: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.eta_a, self.eta_b, self.eta_c, self.eta_d).map(|_| ())
    }
}

impl Default for LossChannelSet {
    fn default() -> Self {
        Self::lossless()
    }
}

/// Photon indistinguishability and the coherence time setting the width of
/// the delay dip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapModel {
    pub alpha_ov: f64,
    pub tau_c: f64,
}

impl OverlapModel {
    pub fn new(alpha_ov: f64, tau_c: f64) -> Result<Self> {
        unit_closed("alpha_ov", alpha_ov)?;
        if !(tau_c > 0.0 && tau_c.is_finite()) {
            return Err(Error::OutOfDomain {
                name: "tau_c",
                value: tau_c,
                domain: "(0, inf)",
            });
        }
        Ok(Self { alpha_ov, tau_c })
    }

    /// Overlap `alpha_ov` with the coherence time of a 100 um wavepacket (about 333 fs).
    pub fn with_default_coherence(alpha_ov: f64) -> Result<Self> {
        Self::new(alpha_ov, DEFAULT_COHERENCE_LENGTH / SPEED_OF_LIGHT)
    }

    /// `alpha_ov exp(-(tau / tau_c)^2)`.
    pub fn overlap_at(&self, tau: f64) -> f64 {
        self.alpha_ov * (-(tau / self.tau_c).powi(2)).exp()
    }

    /// Full width at half depth of the dip, `2 tau_c sqrt(ln 2)`.
    pub fn dip_fwhm(&self) -> f64 {
        2.0 * self.tau_c * std::f64::consts::LN_2.sqrt()
    }
}

/// Heater voltage to interferometer phase: `phi = k V^2 + phi0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    pub k: f64,
    pub phi0: f64,
}

impl PhaseCalibration {
    pub fn new(k: f64, phi0: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::OutOfDomain {
                name: "k",
                value: k,
                domain: "[0, inf)",
            });
        }
        if !phi0.is_finite() {
            return Err(Error::OutOfDomain {
                name: "phi0",
                value: phi0,
                domain: "finite",
            });
        }
        Ok(Self { k, phi0 })
    }

    pub fn phase(&self, voltage: f64) -> f64 {
        self.k * voltage * voltage + self.phi0
    }
}

impl Default for PhaseCalibration {
    /// 1.5 single-photon fringes between 0 and 4.5 V.
    fn default() -> Self {
        Self {
            k: 3.0 * std::f64::consts::PI / (4.5 * 4.5),
            phi0: 0.0,
        }
    }
}
