use rayon::prelude::*;

use crate::elements::MmiModel;
use crate::error::unit_closed;
use crate::fock::{coincidence_probability, DensityMatrix, DetectionStatistics, PureState};
use crate::source::{squeezed_state, SqueezedSource};
use crate::{Error, Result};

use super::{Circuit, LossChannelSet, OverlapModel};

/// What enters the two coupler inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairSource {
    /// Exactly one photon in each input.
    FockPair,
    Squeezed(SqueezedSource),
}

/// Coincidence probabilities for indistinguishable and distinguishable pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomProbabilities {
    pub p_i: f64,
    pub p_d: f64,
    /// Detector statistics of the indistinguishable run.
    pub indistinguishable: DetectionStatistics,
    /// Source weight cut off by the pair-number truncation.
    pub truncation_deficit: f64,
}

impl HomProbabilities {
    pub fn visibility(&self) -> Result<f64> {
        visibility(self.p_i, self.p_d)
    }

    pub fn mixture_visibility(&self, alpha_ov: f64) -> Result<f64> {
        mixture_visibility(self.p_i, self.p_d, alpha_ov)
    }

    /// Coincidence probability when a fraction `alpha_ov` of pairs overlap.
    pub fn mixed_coincidence(&self, alpha_ov: f64) -> f64 {
        alpha_ov * self.p_i + (1.0 - alpha_ov) * self.p_d
    }
}

/// `1 - p_i / p_d`; negative values are anti-dips.
pub fn visibility(p_i: f64, p_d: f64) -> Result<f64> {
    if !(p_d > 0.0) {
        return Err(Error::UndefinedVisibility);
    }
    Ok(1.0 - p_i / p_d)
}

/// `1 - [alpha p_i + (1 - alpha) p_d] / p_d = alpha (1 - p_i / p_d)`.
pub fn mixture_visibility(p_i: f64, p_d: f64, alpha_ov: f64) -> Result<f64> {
    unit_closed("alpha_ov", alpha_ov)?;
    Ok(alpha_ov * visibility(p_i, p_d)?)
}

/// A HOM measurement: input losses, a coupler, output losses and two
/// threshold detectors behind the output losses.
#[derive(Clone, Debug)]
pub struct HomExperiment {
    losses: LossChannelSet,
    mmi: MmiModel,
    n_max_pairs: usize,
    circuit: Circuit,
    /// Coincidence probability for `n` distinguishable pairs, indexed by `n`.
    distinguishable: Vec<f64>,
}

impl HomExperiment {
    pub fn new(losses: LossChannelSet, mmi: MmiModel, n_max_pairs: usize) -> Result<Self> {
        losses.validate()?;
        if n_max_pairs == 0 {
            return Err(Error::OutOfDomain {
                name: "n_max_pairs",
                value: 0.0,
                domain: "[1, inf)",
            });
        }
        let circuit = Circuit::hom(&losses, &mmi, 1, 2 * n_max_pairs)?;
        let distinguishable = (0..=n_max_pairs)
            .map(|n| distinguishable_pair_coincidence(&circuit, n as u32))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            losses,
            mmi,
            n_max_pairs,
            circuit,
            distinguishable,
        })
    }

    pub fn losses(&self) -> &LossChannelSet {
        &self.losses
    }

    pub fn mmi(&self) -> &MmiModel {
        &self.mmi
    }

    pub fn n_max_pairs(&self) -> usize {
        self.n_max_pairs
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Coincidence probability for exactly `n` distinguishable pairs.
    pub fn distinguishable_pair_coincidence(&self, n: usize) -> f64 {
        self.distinguishable[n]
    }

    pub fn probabilities(&self, source: &PairSource) -> Result<HomProbabilities> {
        match source {
            PairSource::FockPair => {
                let rho = DensityMatrix::from_pure(&PureState::basis_state(&[1, 1], 2)?);
                let out = self.circuit.apply(&rho)?;
                Ok(HomProbabilities {
                    p_i: coincidence_probability(&out, 0, 1)?.probability,
                    p_d: self.distinguishable[1],
                    indistinguishable: DetectionStatistics::from_density(&out)?,
                    truncation_deficit: 0.0,
                })
            }
            PairSource::Squeezed(s) => {
                if s.n_max_pairs() > self.n_max_pairs {
                    return Err(Error::DimensionMismatch {
                        expected: self.n_max_pairs,
                        found: s.n_max_pairs(),
                    });
                }
                let rho = DensityMatrix::from_pure(&squeezed_state(s));
                let out = self.circuit.apply(&rho)?;
                let p_d = (1..=s.n_max_pairs())
                    .map(|n| s.pair_weight(n) * self.distinguishable[n])
                    .sum();
                Ok(HomProbabilities {
                    p_i: coincidence_probability(&out, 0, 1)?.probability,
                    p_d,
                    indistinguishable: DetectionStatistics::from_density(&out)?,
                    truncation_deficit: s.truncation_deficit(),
                })
            }
        }
    }

    /// Squeezed input at the experiment's truncation.
    pub fn at_xi(&self, xi: f64) -> Result<HomProbabilities> {
        self.probabilities(&PairSource::Squeezed(SqueezedSource::new(xi, self.n_max_pairs)?))
    }

    /// The vanishing-pump limit: both branches dominated by single pairs.
    pub fn two_photon_limit(&self) -> Result<HomProbabilities> {
        self.probabilities(&PairSource::FockPair)
    }

    /// Mixture visibility at squeezing `xi`; `xi = 0` gives the two-photon limit.
    pub fn mixture_visibility(&self, xi: f64, alpha_ov: f64) -> Result<f64> {
        let p = if xi == 0.0 {
            self.two_photon_limit()?
        } else {
            self.at_xi(xi)?
        };
        p.mixture_visibility(alpha_ov)
    }

    /// Mixture visibility extrapolated to vanishing pump power.
    pub fn nominal_visibility(&self, alpha_ov: f64) -> Result<f64> {
        self.two_photon_limit()?.mixture_visibility(alpha_ov)
    }
}

/// `n` photons in input `a` during one time bin and `n` in input `b` during
/// another. The bins evolve independently and the detectors add them up, so
/// a detector is dark only if it is dark in both bins.
pub(crate) fn distinguishable_pair_coincidence(circuit: &Circuit, n: u32) -> Result<f64> {
    let bin = |occ: [u32; 2]| -> Result<DetectionStatistics> {
        let rho = DensityMatrix::from_pure(&PureState::basis_state(&occ, n as usize)?);
        DetectionStatistics::from_density(&circuit.apply(&rho)?)
    };
    let first = bin([n, 0])?;
    let second = bin([0, n])?;
    Ok(
        first.weight * second.weight - first.p_dark[0] * second.p_dark[0] - first.p_dark[1] * second.p_dark[1]
            + first.p_both_dark * second.p_both_dark,
    )
}

/// One point of a visibility against pair-probability curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityPoint {
    pub xi: f64,
    /// Probability of at least one pair per pulse, `xi^2`.
    pub pair_probability: f64,
    pub visibility: f64,
}

pub fn visibility_vs_pair_probability(
    experiment: &HomExperiment,
    xi_grid: &[f64],
    alpha_ov: f64,
) -> Result<Vec<VisibilityPoint>> {
    unit_closed("alpha_ov", alpha_ov)?;
    xi_grid
        .par_iter()
        .map(|&xi| {
            Ok(VisibilityPoint {
                xi,
                pair_probability: xi * xi,
                visibility: experiment.mixture_visibility(xi, alpha_ov)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayPoint {
    pub tau: f64,
    pub overlap: f64,
    /// Coincidence probability per pulse.
    pub coincidence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayScan {
    pub probabilities: HomProbabilities,
    pub points: Vec<DelayPoint>,
}

impl DelayScan {
    /// Coincidences far outside the coherence time.
    pub fn baseline(&self) -> f64 {
        self.probabilities.p_d
    }
}

/// Coincidences against the delay between the two inputs, with overlap
/// `alpha_ov_max exp(-(tau/tau_c)^2)`.
pub fn hom_delay_scan(
    experiment: &HomExperiment,
    tau_grid: &[f64],
    xi: f64,
    overlap: &OverlapModel,
) -> Result<DelayScan> {
    let probabilities = if xi == 0.0 {
        experiment.two_photon_limit()?
    } else {
        experiment.at_xi(xi)?
    };
    let points = tau_grid
        .iter()
        .map(|&tau| {
            let a = overlap.overlap_at(tau);
            DelayPoint {
                tau,
                overlap: a,
                coincidence: probabilities.mixed_coincidence(a),
            }
        })
        .collect();
    Ok(DelayScan { probabilities, points })
}
