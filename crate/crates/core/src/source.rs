//! Photon-pair sources and threshold detectors.
//!
//! The source emits `sqrt(1 - xi^2) sum_n xi^n |n>|n>`; pair number `n` is
//! therefore drawn with weight `w_n = (1 - xi^2) xi^{2n}`. Detectors are
//! non-number-resolving and click on `n` photons with probability
//! `1 - (1 - eta)^n`. There are no dark counts.

use serde::{Deserialize, Serialize};

use crate::error::{unit_closed, unit_half_open};
use crate::fock::PureState;
use crate::{Error, Result, C64, DEFAULT_N_MAX_PAIRS};

/// Two-mode squeezed vacuum truncated at `n_max_pairs` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezedSource {
    xi: f64,
    n_max_pairs: usize,
}

impl SqueezedSource {
    pub fn new(xi: f64, n_max_pairs: usize) -> Result<Self> {
        unit_half_open("xi", xi)?;
        Ok(Self { xi, n_max_pairs })
    }

    pub fn from_xi_sq(xi_sq: f64, n_max_pairs: usize) -> Result<Self> {
        unit_half_open("xi_sq", xi_sq)?;
        Self::new(xi_sq.sqrt(), n_max_pairs)
    }

    /// Source with the default truncation of nine pairs.
    pub fn with_default_truncation(xi: f64) -> Result<Self> {
        Self::new(xi, DEFAULT_N_MAX_PAIRS)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn xi_sq(&self) -> f64 {
        self.xi * self.xi
    }

    pub fn n_max_pairs(&self) -> usize {
        self.n_max_pairs
    }

    /// `(1 - xi^2) xi^{2n}`.
    pub fn pair_weight(&self, n: usize) -> f64 {
        let q = self.xi_sq();
        (1.0 - q) * q.powi(n as i32)
    }

    /// Weights for `n = 0..=n_max_pairs`.
    pub fn pair_weights(&self) -> Vec<f64> {
        (0..=self.n_max_pairs).map(|n| self.pair_weight(n)).collect()
    }

    /// Weight beyond the truncation, `xi^{2(n_max + 1)}`.
    pub fn truncation_deficit(&self) -> f64 {
        self.xi_sq().powi(self.n_max_pairs as i32 + 1)
    }

    /// Probability of at least one pair per pulse, `xi^2`.
    pub fn pair_probability(&self) -> f64 {
        self.xi_sq()
    }
}

/// `sqrt(1 - xi^2) xi^n` on `|n, n>`, two modes, at most `2 n_max` photons.
pub fn squeezed_state(source: &SqueezedSource) -> PureState {
    let amp0 = (1.0 - source.xi_sq()).sqrt();
    PureState::from_amplitudes(
        2,
        2 * source.n_max_pairs,
        (0..=source.n_max_pairs).map(|n| {
            let n32 = n as u32;
            (vec![n32, n32], C64::new(amp0 * source.xi.powi(n as i32), 0.0))
        }),
    )
    .expect("squeezed terms fit the truncation")
}

/// Squeezed pairs whose two photons occupy different time bins.
///
/// Modes are `[a@t1, b@t1, a@t2, b@t2]`; `n` photons sit in `a@t1` and `n`
/// in `b@t2`. The spatial circuit acts identically on both bins and the
/// detectors do not resolve them.
pub fn distinguishable_squeezed_state(source: &SqueezedSource) -> PureState {
    let amp0 = (1.0 - source.xi_sq()).sqrt();
    PureState::from_amplitudes(
        4,
        2 * source.n_max_pairs,
        (0..=source.n_max_pairs).map(|n| {
            let n32 = n as u32;
            (vec![n32, 0, 0, n32], C64::new(amp0 * source.xi.powi(n as i32), 0.0))
        }),
    )
    .expect("squeezed terms fit the truncation")
}

/// Overall efficiencies of the two detection channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub eta1: f64,
    pub eta2: f64,
}

impl DetectorModel {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        Ok(Self {
            eta1: unit_closed("eta1", eta1)?,
            eta2: unit_closed("eta2", eta2)?,
        })
    }
}

/// Pump intensity to `xi^2` map with the laser repetition rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpMap {
    points: Vec<(f64, f64)>,
    repetition_rate: f64,
}

impl PumpMap {
    /// Points are sorted by intensity; `xi^2` must lie in `[0, 1)` and not
    /// decrease with intensity.
    pub fn new(mut points: Vec<(f64, f64)>, repetition_rate: f64) -> Result<Self> {
        if !(repetition_rate > 0.0) {
            return Err(Error::OutOfDomain {
                name: "repetition_rate",
                value: repetition_rate,
                domain: "(0, inf)",
            });
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(_, q) in &points {
            unit_half_open("xi_sq", q)?;
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::InsufficientData(
                "xi^2 must be non-decreasing in pump intensity".into(),
            ));
        }
        Ok(Self {
            points,
            repetition_rate,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn repetition_rate(&self) -> f64 {
        self.repetition_rate
    }
}

/// `1 - (1 - eta)^n`.
pub fn click_probability(n: u32, eta: f64) -> f64 {
    1.0 - (1.0 - eta).powi(n as i32)
}

fn check_xi(xi: f64) -> Result<f64> {
    unit_half_open("xi", xi)
}

/// Single-detector click probability per pulse, geometric closed form
/// `1 - (1 - xi^2) / (1 - xi^2 (1 - eta))`, written as `xi^2 eta / (1 - xi^2 (1 - eta))`.
pub fn p_single(xi: f64, eta: f64) -> Result<f64> {
    check_xi(xi)?;
    unit_closed("eta", eta)?;
    Ok(missing_weight(xi * xi, 1.0 - eta))
}

/// Coincidence probability per pulse, geometric closed form
/// `1 - S(1-eta1) - S(1-eta2) + S((1-eta1)(1-eta2))` with `S(x) = (1-xi^2)/(1-xi^2 x)`.
pub fn p_coincidence(xi: f64, eta1: f64, eta2: f64) -> Result<f64> {
    check_xi(xi)?;
    unit_closed("eta1", eta1)?;
    unit_closed("eta2", eta2)?;
    let q = xi * xi;
    let (a, b) = (1.0 - eta1, 1.0 - eta2);
    // 1 - S(x) evaluated without the leading cancellation.
    Ok(missing_weight(q, a) + missing_weight(q, b) - missing_weight(q, a * b))
}

/// `1 - (1 - q)/(1 - q x)`.
fn missing_weight(q: f64, x: f64) -> f64 {
    q * (1.0 - x) / (1.0 - q * x)
}

/// Truncated series `sum_{n<=n_max} w_n (1 - (1-eta)^n)`.
pub fn p_single_series(xi: f64, eta: f64, n_max: usize) -> Result<f64> {
    check_xi(xi)?;
    unit_closed("eta", eta)?;
    let q = xi * xi;
    let mut total = 0.0;
    let (mut qn, mut miss) = (1.0 - q, 1.0);
    for _ in 1..=n_max {
        qn *= q;
        miss *= 1.0 - eta;
        total += qn * (1.0 - miss);
    }
    Ok(total)
}

/// Truncated series `sum_{n<=n_max} w_n (1 - (1-eta1)^n)(1 - (1-eta2)^n)`.
pub fn p_coincidence_series(xi: f64, eta1: f64, eta2: f64, n_max: usize) -> Result<f64> {
    check_xi(xi)?;
    unit_closed("eta1", eta1)?;
    unit_closed("eta2", eta2)?;
    let q = xi * xi;
    let mut total = 0.0;
    let (mut qn, mut m1, mut m2) = (1.0 - q, 1.0, 1.0);
    for _ in 1..=n_max {
        qn *= q;
        m1 *= 1.0 - eta1;
        m2 *= 1.0 - eta2;
        total += qn * (1.0 - m1) * (1.0 - m2);
    }
    Ok(total)
}

/// Smallest truncation with `xi^{2(n_max + 1)} < tail`.
pub fn n_max_for_tail(xi_sq: f64, tail: f64) -> usize {
    assert!(
        (0.0..1.0).contains(&xi_sq) && tail > 0.0,
        "geometric tail needs xi^2 in [0, 1)"
    );
    let mut n = 0usize;
    while xi_sq.powi(n as i32 + 1) >= tail {
        n += 1;
    }
    n
}

/// Per-pulse probabilities `(P_C1, P_C2, P_CC)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionProbabilities {
    pub p_c1: f64,
    pub p_c2: f64,
    pub p_cc: f64,
}

pub fn detection_probabilities(xi: f64, detector: &DetectorModel) -> Result<DetectionProbabilities> {
    Ok(DetectionProbabilities {
        p_c1: p_single(xi, detector.eta1)?,
        p_c2: p_single(xi, detector.eta2)?,
        p_cc: p_coincidence(xi, detector.eta1, detector.eta2)?,
    })
}

/// Count rates in counts per second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRates {
    pub c1: f64,
    pub c2: f64,
    pub cc: f64,
}

/// `f` times each per-pulse probability.
pub fn count_rates(xi: f64, detector: &DetectorModel, repetition_rate: f64) -> Result<CountRates> {
    if !(repetition_rate > 0.0) {
        return Err(Error::OutOfDomain {
            name: "repetition_rate",
            value: repetition_rate,
            domain: "(0, inf)",
        });
    }
    let p = detection_probabilities(xi, detector)?;
    Ok(CountRates {
        c1: repetition_rate * p.p_c1,
        c2: repetition_rate * p.p_c2,
        cc: repetition_rate * p.p_cc,
    })
}
