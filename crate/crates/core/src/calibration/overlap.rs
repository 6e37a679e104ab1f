use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elements::{loss_fraction_to_db, phase_bound_min_phi, MmiModel};
use crate::error::{unit_closed, unit_half_open};
use crate::experiments::{HomExperiment, LossChannelSet};
use crate::{Error, Result};

/// Bootstrap resamples behind the nominal-visibility uncertainty.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// A visibility measured at one pump power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityRecord {
    pub xi_sq: f64,
    pub v: f64,
    /// One-sigma uncertainty; unweighted when absent.
    pub sigma_v: Option<f64>,
}

impl VisibilityRecord {
    pub fn new(xi_sq: f64, v: f64, sigma_v: Option<f64>) -> Result<Self> {
        unit_half_open("xi_sq", xi_sq)?;
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::OutOfDomain {
                name: "v",
                value: v,
                domain: "[-1, 1]",
            });
        }
        if let Some(s) = sigma_v {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::OutOfDomain {
                    name: "sigma_v",
                    value: s,
                    domain: "(0, inf)",
                });
            }
        }
        Ok(Self { xi_sq, v, sigma_v })
    }

    fn weight(&self) -> f64 {
        self.sigma_v.map_or(1.0, |s| 1.0 / (s * s))
    }
}

/// Overlap fitted to a visibility curve, and the visibility it implies at
/// vanishing pump power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapFit {
    pub alpha_ov: f64,
    pub v_nominal: f64,
    /// Bootstrap standard deviation of `v_nominal`.
    pub v_nominal_stderr: f64,
    /// Weighted sum of squared residuals at the optimum.
    pub residual: f64,
    /// Model visibility at unit overlap for each record.
    pub unit_visibility: Vec<f64>,
    /// Model visibility at unit overlap in the two-photon limit.
    pub nominal_unit_visibility: f64,
    observed: Vec<f64>,
    weights: Vec<f64>,
}

impl OverlapFit {
    /// Weighted sum of squared residuals for any overlap.
    pub fn residual_at(&self, alpha_ov: f64) -> f64 {
        weighted_residual(&self.unit_visibility, &self.observed, &self.weights, alpha_ov)
    }
}

fn weighted_residual(u: &[f64], v: &[f64], w: &[f64], alpha: f64) -> f64 {
    u.iter()
        .zip(v)
        .zip(w)
        .map(|((u, v), w)| w * (v - alpha * u).powi(2))
        .sum()
}

/// The model is `alpha u_k`, so the weighted least-squares overlap is
/// `sum w u v / sum w u^2`, clamped to `[0, 1]`.
fn best_alpha(u: &[f64], v: &[f64], w: &[f64]) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((u, v), w) in u.iter().zip(v).zip(w) {
        num += w * u * v;
        den += w * u * u;
    }
    (den > 0.0).then(|| (num / den).clamp(0.0, 1.0))
}

/// Fits the overlap `alpha_ov` to measured visibilities and extrapolates
/// the visibility at vanishing pump power.
///
/// The nominal visibility is the model evaluated in the two-photon limit,
/// not read off the fitted curve. Its uncertainty comes from refitting
/// [`BOOTSTRAP_RESAMPLES`] resamples of the records; resample `b` draws from
/// stream `b` of a generator seeded with `seed`.
pub fn fit_overlap(records: &[VisibilityRecord], experiment: &HomExperiment, seed: u64) -> Result<OverlapFit> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "overlap fit needs at least 2 visibilities, got {}",
            records.len()
        )));
    }
    for r in records {
        VisibilityRecord::new(r.xi_sq, r.v, r.sigma_v)?;
    }
    if records.iter().all(|r| r.xi_sq == records[0].xi_sq) {
        return Err(Error::InsufficientData(
            "all visibilities were taken at the same pair probability".into(),
        ));
    }

    let nominal_unit_visibility = experiment.two_photon_limit()?.visibility()?;
    let unit_visibility = records
        .par_iter()
        .map(|r| {
            if r.xi_sq == 0.0 {
                Ok(nominal_unit_visibility)
            } else {
                experiment.at_xi(r.xi_sq.sqrt())?.visibility()
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let observed: Vec<f64> = records.iter().map(|r| r.v).collect();
    let weights: Vec<f64> = records.iter().map(VisibilityRecord::weight).collect();

    let alpha_ov = best_alpha(&unit_visibility, &observed, &weights)
        .ok_or_else(|| Error::InsufficientData("model predicts no visibility at any record".into()))?;

    let n = records.len();
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let pick = |src: &[f64]| idx.iter().map(|&i| src[i]).collect::<Vec<f64>>();
            best_alpha(&pick(&unit_visibility), &pick(&observed), &pick(&weights)).map(|a| a * nominal_unit_visibility)
        })
        .collect();
    let v_nominal_stderr = if boot.len() > 1 {
        let mean = boot.iter().sum::<f64>() / boot.len() as f64;
        (boot.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt()
    } else {
        0.0
    };

    Ok(OverlapFit {
        alpha_ov,
        v_nominal: alpha_ov * nominal_unit_visibility,
        v_nominal_stderr,
        residual: weighted_residual(&unit_visibility, &observed, &weights, alpha_ov),
        unit_visibility,
        nominal_unit_visibility,
        observed,
        weights,
    })
}

/// Coupler loss that, at the smallest internal phase it permits, brings the
/// nominal visibility down to a target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossExplanation {
    pub alpha_loss: f64,
    pub loss_db: f64,
    pub phi: f64,
    pub nominal_visibility: f64,
}

fn nominal_at_loss(alpha_loss: f64, alpha_ov: f64) -> Result<(f64, f64)> {
    let phi = phase_bound_min_phi(alpha_loss)?;
    let exp = HomExperiment::new(LossChannelSet::lossless(), MmiModel::lossy(0.5, alpha_loss, phi)?, 1)?;
    Ok((exp.nominal_visibility(alpha_ov)?, phi))
}

/// Smallest balanced-coupler loss whose phase penalty explains a nominal
/// visibility of `target` for photons of overlap `alpha_ov`.
///
/// The nominal visibility falls monotonically from `alpha_ov` as the loss
/// grows, so the loss is found by bisection on `[0, 0.5]`.
pub fn scan_loss_explanations(target: f64, alpha_ov: f64) -> Result<LossExplanation> {
    unit_closed("alpha_ov", alpha_ov)?;
    if !(target > 0.0 && target < alpha_ov) {
        return Err(Error::Unreachable(format!(
            "nominal visibility {target} must lie in (0, alpha_ov = {alpha_ov}); \
             the coupler phase cannot raise visibility above the overlap"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    if nominal_at_loss(hi, alpha_ov)?.0 > target {
        return Err(Error::Unreachable(format!(
            "visibility {target} needs a coupler loss of at least half the light"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if nominal_at_loss(mid, alpha_ov)?.0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_loss = 0.5 * (lo + hi);
    let (nominal_visibility, phi) = nominal_at_loss(alpha_loss, alpha_ov)?;
    Ok(LossExplanation {
        alpha_loss,
        loss_db: loss_fraction_to_db(alpha_loss),
        phi,
        nominal_visibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn curve(exp: &HomExperiment, alpha: f64, xs: &[f64]) -> Vec<VisibilityRecord> {
        xs.iter()
            .map(|&q| {
                let v = exp.mixture_visibility(q.sqrt(), alpha).unwrap();
                VisibilityRecord::new(q, v, Some(0.01)).unwrap()
            })
            .collect()
    }

    fn device_like() -> HomExperiment {
        let losses = LossChannelSet::new(0.4, 0.35, 0.05, 0.1).unwrap();
        HomExperiment::new(losses, MmiModel::minimal_loss(2.74).unwrap(), 6).unwrap()
    }

    #[test]
    fn noiseless_round_trip() {
        let exp = device_like();
        let recs = curve(&exp, 0.92, &[0.02, 0.05, 0.1, 0.15, 0.2]);
        let fit = fit_overlap(&recs, &exp, 3).unwrap();
        assert!((fit.alpha_ov - 0.92).abs() < 1e-4, "{}", fit.alpha_ov);
        assert!(fit.residual < 1e-20);
        assert!(fit.v_nominal_stderr < 1e-9);
    }

    #[test]
    fn perfect_overlap_ideal_coupler() {
        let exp = HomExperiment::new(LossChannelSet::lossless(), MmiModel::Ideal, 5).unwrap();
        let recs = curve(&exp, 1.0, &[0.01, 0.1, 0.2]);
        let fit = fit_overlap(&recs, &exp, 0).unwrap();
        assert!((fit.v_nominal - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nominal_is_the_low_power_limit() {
        let exp = HomExperiment::new(LossChannelSet::lossless(), MmiModel::minimal_loss(2.74).unwrap(), 5).unwrap();
        let recs = curve(&exp, 0.955, &[0.02, 0.08, 0.15, 0.25]);
        let fit = fit_overlap(&recs, &exp, 0).unwrap();
        assert!((fit.v_nominal - 0.88).abs() < 0.01, "{}", fit.v_nominal);
        let limit = exp.mixture_visibility(1e-5, fit.alpha_ov).unwrap();
        assert!((fit.v_nominal - limit).abs() < 1e-6);
    }

    #[test]
    fn optimum_beats_perturbations() {
        let exp = device_like();
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let recs: Vec<VisibilityRecord> = curve(&exp, 0.9, &[0.01, 0.04, 0.09, 0.16, 0.25])
            .into_iter()
            .map(|r| VisibilityRecord::new(r.xi_sq, r.v + noise.sample(&mut rng), r.sigma_v).unwrap())
            .collect();
        let fit = fit_overlap(&recs, &exp, 9).unwrap();
        for i in 0..21 {
            let delta = (i as f64 - 10.0) * 2e-3;
            if delta != 0.0 {
                assert!(fit.residual <= fit.residual_at((fit.alpha_ov + delta).clamp(0.0, 1.0)));
            }
        }
        assert!(fit.v_nominal_stderr > 0.0 && fit.v_nominal_stderr < 0.05);
        let again = fit_overlap(&recs, &exp, 9).unwrap();
        assert_eq!(fit, again);
    }

    #[test]
    fn degenerate_records_rejected() {
        let exp = device_like();
        let same = vec![VisibilityRecord::new(0.1, 0.7, None).unwrap(); 3];
        assert!(matches!(fit_overlap(&same, &exp, 0), Err(Error::InsufficientData(_))));
        assert!(fit_overlap(&same[..1], &exp, 0).is_err());
        assert!(VisibilityRecord::new(0.1, 1.2, None).is_err());
        assert!(VisibilityRecord::new(0.1, 0.5, Some(0.0)).is_err());
    }

    #[test]
    fn loss_explanations() {
        let e = scan_loss_explanations(0.88, 0.955).unwrap();
        assert!((e.loss_db - 0.8).abs() < 0.05, "{e:?}");
        assert!((e.phi - 2.74).abs() < 0.02, "{e:?}");
        assert!((e.nominal_visibility - 0.88).abs() < 1e-9);
        let e = scan_loss_explanations(0.995, 1.0).unwrap();
        assert!((e.loss_db - 0.2).abs() < 0.05, "{e:?}");
        assert!(matches!(
            scan_loss_explanations(0.96, 0.955),
            Err(Error::Unreachable(_))
        ));
        assert!(scan_loss_explanations(0.0, 0.955).is_err());
    }
}
