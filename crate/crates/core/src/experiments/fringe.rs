use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::elements::{mzi, MmiModel};
use crate::error::unit_closed;
use crate::fock::{coincidence_probability, DensityMatrix, DetectionStatistics, PureState};
use crate::source::SqueezedSource;
use crate::{Error, Result, C64};

use super::hom::distinguishable_pair_coincidence;
use super::{Circuit, PhaseCalibration};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringePoint {
    pub voltage: f64,
    pub phi: f64,
    pub probability: f64,
}

/// `1/2 [1 - cos phi]`: a photon entering arm 0 leaves through arm 1.
pub fn single_photon_reference(phi: f64) -> f64 {
    0.5 * (1.0 - phi.cos())
}

/// `1/2 [1 + cos 2 phi]`, the coincidence rate for one photon per input.
///
/// The first coupler turns `|1,1>` into a two-photon NOON state whose phase
/// leads the arm phase by `pi/2`, so this is `1/2 [1 - cos 2 phi_N]` with
/// `phi_N = phi + pi/2`.
pub fn two_photon_reference(phi: f64) -> f64 {
    0.5 * (1.0 + (2.0 * phi).cos())
}

fn mzi_circuit(phi: f64, mmi: &MmiModel, system_modes: usize, max_total: usize) -> Result<Circuit> {
    let mut c = Circuit::new(system_modes, max_total);
    c.push(&mzi(phi, mmi)?, &[0, 1])?;
    Ok(c)
}

/// Probability that a single photon entering arm 0 is detected at arm 1.
pub fn single_photon_fringe(voltages: &[f64], cal: &PhaseCalibration, mmi: &MmiModel) -> Result<Vec<FringePoint>> {
    voltages
        .par_iter()
        .map(|&voltage| {
            let phi = cal.phase(voltage);
            let c = mzi_circuit(phi, mmi, 2, 1)?;
            let out = c.apply(&DensityMatrix::from_pure(&PureState::basis_state(&[1, 0], 1)?))?;
            Ok(FringePoint {
                voltage,
                phi,
                probability: DetectionStatistics::from_density(&out)?.p_click(1),
            })
        })
        .collect()
}

/// Coincidences for one photon per input, a fraction `alpha_ov` of pairs
/// overlapping and the rest distinguishable.
pub fn two_photon_fringe(
    voltages: &[f64],
    cal: &PhaseCalibration,
    mmi: &MmiModel,
    alpha_ov: f64,
) -> Result<Vec<FringePoint>> {
    unit_closed("alpha_ov", alpha_ov)?;
    voltages
        .par_iter()
        .map(|&voltage| {
            let phi = cal.phase(voltage);
            let c = mzi_circuit(phi, mmi, 2, 2)?;
            let out = c.apply(&DensityMatrix::from_pure(&PureState::basis_state(&[1, 1], 2)?))?;
            let p_i = coincidence_probability(&out, 0, 1)?.probability;
            let p_d = distinguishable_pair_coincidence(&c, 1)?;
            Ok(FringePoint {
                voltage,
                phi,
                probability: alpha_ov * p_i + (1.0 - alpha_ov) * p_d,
            })
        })
        .collect()
}

/// Fringes with a squeezed source in place of Fock inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezedFringePoint {
    pub phi: f64,
    /// Signal detected at arm 1 given exactly one idler photon.
    pub single_heralded: f64,
    /// `|1,1>` output given exactly two photons at the outputs.
    pub two_photon_postselected: f64,
    /// Heralded single-photon rate with threshold detectors on both sides.
    pub single_threshold: f64,
    /// Threshold coincidences per pulse divided by the pair probability.
    pub two_photon_threshold: f64,
}

/// One phase setting of both fringes driven by a squeezed source.
///
/// For the single-photon fringe the signal enters arm 0 and the idler is kept
/// as a third mode; for the two-photon fringe the pair enters both arms.
pub fn squeezed_fringe_point(phi: f64, source: &SqueezedSource, mmi: &MmiModel) -> Result<SqueezedFringePoint> {
    let n_max = source.n_max_pairs();
    let max_total = 2 * n_max;
    let amp0 = (1.0 - source.xi_sq()).sqrt();
    let amp = |n: usize| C64::new(amp0 * source.xi().powi(n as i32), 0.0);

    let heralded =
        PureState::from_amplitudes(3, max_total, (0..=n_max).map(|n| (vec![n as u32, 0, n as u32], amp(n))))?;
    let out = mzi_circuit(phi, mmi, 3, max_total)?.apply(&DensityMatrix::from_pure(&heralded))?;
    let mut idler_one = 0.0;
    let mut idler_one_hit = 0.0;
    let mut idler_any = 0.0;
    let mut idler_any_hit = 0.0;
    for (i, s) in out.basis().states().iter().enumerate() {
        let o = s.occupations();
        let p = out.entries()[(i, i)].re;
        if o[2] == 1 {
            idler_one += p;
            if o[1] == 1 && o[0] == 0 {
                idler_one_hit += p;
            }
        }
        if o[2] >= 1 {
            idler_any += p;
            if o[1] >= 1 {
                idler_any_hit += p;
            }
        }
    }

    let pair = PureState::from_amplitudes(2, max_total, (0..=n_max).map(|n| (vec![n as u32, n as u32], amp(n))))?;
    let out = mzi_circuit(phi, mmi, 2, max_total)?.apply(&DensityMatrix::from_pure(&pair))?;
    let two: f64 = out.basis().sector(2).map(|i| out.entries()[(i, i)].re).sum();
    let two_hit = out.population(&[1, 1]);
    let coincidences = coincidence_probability(&out, 0, 1)?.probability;

    if !(idler_one > 0.0 && two > 0.0) {
        return Err(Error::InsufficientData(format!(
            "no one-pair weight at xi^2 = {}",
            source.xi_sq()
        )));
    }
    Ok(SqueezedFringePoint {
        phi,
        single_heralded: idler_one_hit / idler_one,
        two_photon_postselected: two_hit / two,
        single_threshold: idler_any_hit / idler_any,
        two_photon_threshold: coincidences / source.pair_probability(),
    })
}

/// `(max - min) / (max + min)` over the scan.
pub fn fringe_visibility(values: &[f64]) -> Result<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || !(max + min > 0.0) {
        return Err(Error::InsufficientData("fringe visibility needs a nonzero scan".into()));
    }
    Ok((max - min) / (max + min))
}

/// Two-photon fringe visibility above which the fringe cannot be explained
/// by classical light, `1/sqrt 2`.
pub const VISIBILITY_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn exceeds_visibility_threshold(visibility: f64) -> bool {
    visibility > VISIBILITY_THRESHOLD
}

/// Period of the strongest oscillation in `y(x)`.
///
/// The samples are resampled onto a uniform grid and the largest peak of the
/// zero-padded FFT picks the frequency. A sinusoid-plus-offset least-squares
/// fit around that peak then removes the leakage bias of short scans.
pub fn dominant_period(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() || n < 8 {
        return Err(Error::InsufficientData(format!(
            "period detection needs at least 8 paired samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if !x.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InsufficientData("sample positions must increase".into()));
    }

    let m = (4 * n).next_power_of_two();
    let span = x[n - 1] - x[0];
    let dx = span / (m - 1) as f64;
    let mut uniform = Vec::with_capacity(m);
    let mut j = 0;
    for i in 0..m {
        let t = (x[0] + i as f64 * dx).min(x[n - 1]);
        while j + 2 < n && x[j + 1] < t {
            j += 1;
        }
        let f = (t - x[j]) / (x[j + 1] - x[j]);
        uniform.push(y[j] + f * (y[j + 1] - y[j]));
    }
    let mean = uniform.iter().sum::<f64>() / m as f64;

    let padded = 8 * m;
    let mut buf: Vec<Complex<f64>> = uniform
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded)
        .collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let (k, peak) = buf[1..padded / 2]
        .iter()
        .enumerate()
        .map(|(i, z)| (i + 1, z.norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if !(peak > 1e-12 * m as f64) {
        return Err(Error::InsufficientData("scan has no oscillating component".into()));
    }

    let bin = 2.0 * PI / (padded as f64 * dx);
    let omega0 = k as f64 * bin;
    let cost = |omega: f64| sinusoid_residual(x, y, omega);
    let (mut lo, mut hi) = ((omega0 - 2.0 * bin).max(0.5 * bin), omega0 + 2.0 * bin);
    let steps = 64;
    let best = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .map(|w| (w, cost(w)))
        .fold((omega0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let h = (hi - lo) / steps as f64;
    lo = (best.0 - h).max(lo);
    hi = (best.0 + h).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fa, mut fb) = (cost(a), cost(b));
    for _ in 0..80 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = cost(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = cost(b);
        }
    }
    Ok(2.0 * PI / (0.5 * (lo + hi)))
}

/// Residual sum of squares of `y ~ c0 + c1 cos(w x) + c2 sin(w x)`.
fn sinusoid_residual(x: &[f64], y: &[f64], omega: f64) -> f64 {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&xi, &yi) in x.iter().zip(y) {
        let row = Vector3::new(1.0, (omega * xi).cos(), (omega * xi).sin());
        ata += row * row.transpose();
        aty += row * yi;
    }
    let Some(c) = ata.lu().solve(&aty) else {
        return f64::INFINITY;
    };
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (c[0] + c[1] * (omega * xi).cos() + c[2] * (omega * xi).sin());
            r * r
        })
        .sum()
}
