//! Named model configurations matching the measured device and source.
//!
//! - [`nominal_hom`]: photons of overlap 0.955 meeting in a coupler whose
//!   internal phase is 2.74 rad, with no external loss. Its low-power
//!   visibility is about 0.879.
//! - [`dip_80_lossless`] and [`dip_80_chip`]: the same coupler pumped hard
//!   enough that multi-pair emission pulls the dip visibility to 0.80,
//!   either without external loss or with the chip and detector losses of
//!   [`chip_losses`].
//! - [`two_photon_fringe_818`]: an ideal interferometer fed by photon pairs
//!   of overlap 0.80, giving a two-photon fringe visibility of 0.818.

use crate::elements::{db_to_loss_fraction, MmiModel};
use crate::experiments::{fringe_visibility, two_photon_fringe, HomExperiment, LossChannelSet, PhaseCalibration};
use crate::{Result, DEFAULT_N_MAX_PAIRS};

/// Photon overlap measured with a bulk beamsplitter at low pump power.
pub const DEVICE_ALPHA_OV: f64 = 0.955;

/// Internal coupler phase that a 0.8 dB loss allows.
pub const DEVICE_MMI_PHI: f64 = 2.74;

/// Total chip insertion loss including both facets, dB.
pub const CHIP_INSERTION_LOSS_DB: f64 = 9.0;

/// Efficiencies of the two detectors.
pub const DETECTOR_EFFICIENCIES: [f64; 2] = [0.05, 0.15];

/// `xi^2` at which [`dip_80_lossless`] reaches a visibility of 0.80.
pub const XI_SQ_DIP_80_LOSSLESS: f64 = 0.1753;

/// `xi^2` at which [`dip_80_chip`] reaches a visibility of 0.80.
pub const XI_SQ_DIP_80_CHIP: f64 = 0.0526;

/// Pair overlap behind [`two_photon_fringe_818`]; the ideal fringe
/// visibility is `(1 + a) / (3 - a)`.
pub const FRINGE_ALPHA_OV: f64 = 0.80;

/// Insertion loss split evenly between the input and output facets, and the
/// detector efficiencies folded into the output channels.
pub fn chip_losses() -> LossChannelSet {
    let facet = 1.0 - db_to_loss_fraction(CHIP_INSERTION_LOSS_DB / 2.0);
    LossChannelSet {
        eta_a: facet,
        eta_b: facet,
        eta_c: facet * DETECTOR_EFFICIENCIES[0],
        eta_d: facet * DETECTOR_EFFICIENCIES[1],
    }
}

/// A HOM configuration evaluated at one pump setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomPreset {
    pub losses: LossChannelSet,
    pub mmi: MmiModel,
    pub alpha_ov: f64,
    /// `0` stands for the low-power limit.
    pub xi_sq: f64,
    pub n_max_pairs: usize,
}

impl HomPreset {
    pub fn experiment(&self) -> Result<HomExperiment> {
        HomExperiment::new(self.losses, self.mmi, self.n_max_pairs)
    }

    pub fn visibility(&self) -> Result<f64> {
        self.experiment()?.mixture_visibility(self.xi_sq.sqrt(), self.alpha_ov)
    }
}

pub fn nominal_hom() -> Result<HomPreset> {
    Ok(HomPreset {
        losses: LossChannelSet::lossless(),
        mmi: MmiModel::minimal_loss(DEVICE_MMI_PHI)?,
        alpha_ov: DEVICE_ALPHA_OV,
        xi_sq: 0.0,
        n_max_pairs: DEFAULT_N_MAX_PAIRS,
    })
}

pub fn dip_80_lossless() -> Result<HomPreset> {
    Ok(HomPreset {
        xi_sq: XI_SQ_DIP_80_LOSSLESS,
        ..nominal_hom()?
    })
}

pub fn dip_80_chip() -> Result<HomPreset> {
    Ok(HomPreset {
        losses: chip_losses(),
        xi_sq: XI_SQ_DIP_80_CHIP,
        ..nominal_hom()?
    })
}

/// A two-photon fringe configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringePreset {
    pub mmi: MmiModel,
    pub alpha_ov: f64,
}

impl FringePreset {
    /// Visibility of a scan over one two-photon period (181 phases).
    pub fn visibility(&self) -> Result<f64> {
        let cal = PhaseCalibration::new(1.0, 0.0)?;
        let voltages: Vec<f64> = (0..181)
            .map(|i| (std::f64::consts::PI * i as f64 / 180.0).sqrt())
            .collect();
        let scan = two_photon_fringe(&voltages, &cal, &self.mmi, self.alpha_ov)?;
        fringe_visibility(&scan.iter().map(|p| p.probability).collect::<Vec<_>>())
    }
}

pub fn two_photon_fringe_818() -> FringePreset {
    FringePreset {
        mmi: MmiModel::Ideal,
        alpha_ov: FRINGE_ALPHA_OV,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::exceeds_visibility_threshold;

    #[test]
    fn chip_losses_follow_insertion_budget() {
        let l = chip_losses();
        assert!((l.eta_a - 0.354_813).abs() < 1e-6);
        assert!((l.eta_c / l.eta_d - 1.0 / 3.0).abs() < 1e-12);
        let total_db = -10.0 * (l.eta_a * l.eta_a).log10();
        assert!((total_db - 9.0).abs() < 1e-12);
    }

    #[test]
    fn presets_hit_their_targets() {
        assert!((nominal_hom().unwrap().visibility().unwrap() - 0.88).abs() < 0.01);
        assert!((dip_80_lossless().unwrap().visibility().unwrap() - 0.80).abs() < 0.01);
        assert!((dip_80_chip().unwrap().visibility().unwrap() - 0.80).abs() < 0.01);
        let v = two_photon_fringe_818().visibility().unwrap();
        assert!((v - 0.818).abs() < 0.01);
        assert!((v - 1.8 / 2.2).abs() < 1e-12);
        assert!(exceeds_visibility_threshold(v));
    }
}
