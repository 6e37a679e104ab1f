use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::source::{p_coincidence, p_single};
use crate::{Error, Result};

use super::simplex::{minimize_scalar, nelder_mead, SimplexOptions, SimplexResult};

/// Floor on the denominator of each relative residual, in counts/s.
pub const RATE_FLOOR: f64 = 1.0;

/// Count rates measured at one pump intensity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub intensity: f64,
    pub c1: f64,
    pub c2: f64,
    pub cc: f64,
}

impl CountRecord {
    /// Rates must be finite and non-negative, and coincidences may exceed the
    /// smaller single rate only by a Poisson-sized margin.
    pub fn new(intensity: f64, c1: f64, c2: f64, cc: f64) -> Result<Self> {
        for (name, v) in [("intensity", intensity), ("c1", c1), ("c2", c2), ("cc", cc)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::OutOfDomain {
                    name,
                    value: v,
                    domain: "[0, inf)",
                });
            }
        }
        let singles = c1.min(c2);
        if cc > singles + 5.0 * singles.sqrt() + RATE_FLOOR {
            return Err(Error::OutOfDomain {
                name: "cc",
                value: cc,
                domain: "at most min(c1, c2) plus counting noise",
            });
        }
        Ok(Self { intensity, c1, c2, cc })
    }
}

/// Channel efficiencies and per-record squeezing recovered from count rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub eta1: f64,
    pub eta2: f64,
    /// One `xi^2` per record, in input order.
    pub xi_sq_per_power: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Condition estimate of the efficiency fit from the final simplex.
    pub condition: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    /// Latin-hypercube starting points, on top of the moment estimate.
    pub restarts: usize,
    pub simplex: SimplexOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 5,
            simplex: SimplexOptions {
                max_iterations: 2000,
                x_tol: 1e-11,
                f_tol: 1e-15,
            },
        }
    }
}

const LN_ETA_MIN: f64 = -13.815_510_557_964_274; // ln 1e-6
const LN_XI_SQ_MIN: f64 = -27.631_021_115_928_547; // ln 1e-12
const XI_SQ_MAX: f64 = 1.0 - 1e-9;

fn relative(model: f64, obs: f64) -> f64 {
    (model - obs) / obs.max(RATE_FLOOR)
}

fn record_cost(r: &CountRecord, eta1: f64, eta2: f64, xi_sq: f64, f: f64) -> f64 {
    let xi = xi_sq.sqrt();
    let m1 = f * p_single(xi, eta1).expect("parameters inside the box");
    let m2 = f * p_single(xi, eta2).expect("parameters inside the box");
    let mc = f * p_coincidence(xi, eta1, eta2).expect("parameters inside the box");
    relative(m1, r.c1).powi(2) + relative(m2, r.c2).powi(2) + relative(mc, r.cc).powi(2)
}

/// Relative least-squares objective over all records.
pub fn count_objective(records: &[CountRecord], eta1: f64, eta2: f64, xi_sq: &[f64], f: f64) -> f64 {
    records
        .iter()
        .zip(xi_sq)
        .map(|(r, &q)| record_cost(r, eta1, eta2, q, f))
        .sum()
}

/// Best `xi^2` for one record at fixed efficiencies.
fn profile_xi_sq(r: &CountRecord, eta1: f64, eta2: f64, f: f64) -> (f64, f64) {
    let (u, v) = minimize_scalar(
        |u| record_cost(r, eta1, eta2, u.exp().min(XI_SQ_MAX), f),
        LN_XI_SQ_MIN,
        XI_SQ_MAX.ln(),
        64,
    );
    (u.exp().min(XI_SQ_MAX), v)
}

fn profiled(records: &[CountRecord], ln_eta: &[f64], f: f64) -> f64 {
    let (e1, e2) = (ln_eta[0].exp(), ln_eta[1].exp());
    records.iter().map(|r| profile_xi_sq(r, e1, e2, f).1).sum()
}

/// Start from `xi^2 ~ C1 C2 / (f CC)` and `eta_i ~ C_i / (f xi^2)`.
fn moment_start(records: &[CountRecord], f: f64) -> [f64; 2] {
    let mut e1 = Vec::new();
    let mut e2 = Vec::new();
    for r in records {
        if r.cc > 0.0 {
            let q = (r.c1 * r.c2 / (f * r.cc)).clamp(1e-12, 0.99);
            e1.push(r.c1 / (f * q));
            e2.push(r.c2 / (f * q));
        }
    }
    let median = |v: &mut Vec<f64>| {
        if v.is_empty() {
            return 0.1;
        }
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    [
        median(&mut e1).clamp(1e-6, 1.0).ln(),
        median(&mut e2).clamp(1e-6, 1.0).ln(),
    ]
}

/// Latin-hypercube points in `ln eta` over `[ln 1e-3, 0]^2`.
fn latin_hypercube(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = (1e-3f64).ln();
    let mut column = || {
        let mut strata: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random::<f64>()) / n as f64).collect();
        strata.shuffle(&mut rng);
        strata
    };
    let (a, b) = (column(), column());
    a.iter()
        .zip(&b)
        .map(|(x, y)| [lo * (1.0 - x), lo * (1.0 - y)])
        .collect()
}

/// Fits `(eta1, eta2)` and one `xi^2` per record to measured count rates.
///
/// The squeezing parameters enter each record separately, so they are
/// profiled out exactly for every trial efficiency pair; Nelder-Mead then
/// searches the two log-efficiencies from the moment estimate and from
/// `restarts` Latin-hypercube points, and a final restart polishes the best
/// result. Records are put into a canonical order first, so the result does
/// not depend on the order they were supplied in.
pub fn fit_efficiencies_with(records: &[CountRecord], f: f64, options: &FitOptions) -> Result<FitResult> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "efficiency fit needs at least 2 pump powers, got {}",
            records.len()
        )));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::OutOfDomain {
            name: "repetition_rate",
            value: f,
            domain: "(0, inf)",
        });
    }
    for r in records {
        CountRecord::new(r.intensity, r.c1, r.c2, r.cc)?;
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&records[a], &records[b]);
        x.intensity
            .total_cmp(&y.intensity)
            .then(x.c1.total_cmp(&y.c1))
            .then(x.c2.total_cmp(&y.c2))
            .then(x.cc.total_cmp(&y.cc))
    });
    let sorted: Vec<CountRecord> = order.iter().map(|&i| records[i]).collect();

    let lower = [LN_ETA_MIN; 2];
    let upper = [0.0; 2];
    let step = [0.5; 2];
    let objective = |x: &[f64]| profiled(&sorted, x, f);

    let mut starts = vec![moment_start(&sorted, f)];
    starts.extend(latin_hypercube(options.restarts, options.seed));
    let mut iterations = 0;
    let mut best: Option<SimplexResult> = None;
    for s in &starts {
        let r = nelder_mead(objective, s, &step, &lower, &upper, &options.simplex);
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    let polish = nelder_mead(objective, &best.x, &[0.05; 2], &lower, &upper, &options.simplex);
    iterations += polish.iterations;
    let fin = if polish.value <= best.value { polish } else { best };

    let (eta1, eta2) = (fin.x[0].exp(), fin.x[1].exp());
    let sorted_xi: Vec<f64> = sorted.iter().map(|r| profile_xi_sq(r, eta1, eta2, f).0).collect();
    let mut xi_sq_per_power = vec![0.0; records.len()];
    for (&q, &i) in sorted_xi.iter().zip(&order) {
        xi_sq_per_power[i] = q;
    }
    Ok(FitResult {
        eta1,
        eta2,
        residual: count_objective(&sorted, eta1, eta2, &sorted_xi, f),
        xi_sq_per_power,
        converged: fin.converged,
        iterations,
        condition: fin.condition(),
    })
}

/// [`fit_efficiencies_with`] using the default seed and restarts.
pub fn fit_efficiencies(records: &[CountRecord], f: f64) -> Result<FitResult> {
    fit_efficiencies_with(records, f, &FitOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{count_rates, DetectorModel};
    use rand_distr::{Distribution, Normal};

    const F: f64 = 8.0e7;

    fn synthetic(eta1: f64, eta2: f64, xi_sq: &[f64]) -> Vec<CountRecord> {
        let det = DetectorModel::new(eta1, eta2).unwrap();
        xi_sq
            .iter()
            .enumerate()
            .map(|(k, &q)| {
                let c = count_rates(q.sqrt(), &det, F).unwrap();
                CountRecord::new(k as f64 + 1.0, c.c1, c.c2, c.cc).unwrap()
            })
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = [0.01, 0.05, 0.1];
        let fit = fit_efficiencies(&synthetic(0.05, 0.15, &truth), F).unwrap();
        assert!(rel(fit.eta1, 0.05) < 1e-4, "{fit:?}");
        assert!(rel(fit.eta2, 0.15) < 1e-4, "{fit:?}");
        for (q, t) in fit.xi_sq_per_power.iter().zip(truth) {
            assert!(rel(*q, t) < 1e-4);
        }
        assert!(fit.residual < 1e-12);
        assert!(fit.converged);
        assert!(fit.condition >= 1.0);
    }

    #[test]
    fn round_trip_across_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let e1 = rng.random_range(0.01..0.9);
            let e2 = rng.random_range(0.01..0.9);
            let xs: Vec<f64> = (0..4).map(|_| rng.random_range(0.005..0.3)).collect();
            let fit = fit_efficiencies(&synthetic(e1, e2, &xs), F).unwrap();
            assert!(
                rel(fit.eta1, e1) < 1e-4 && rel(fit.eta2, e2) < 1e-4,
                "{e1} {e2} {fit:?}"
            );
        }
    }

    #[test]
    fn noisy_recovery_rate() {
        let truth: Vec<f64> = (1..=10).map(|k| 0.01 * k as f64).collect();
        let clean = synthetic(0.05, 0.15, &truth);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut ok = 0;
        for trial in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let noisy: Vec<CountRecord> = clean
                .iter()
                .map(|r| {
                    let mut jitter = || 1.0 + noise.sample(&mut rng);
                    CountRecord::new(r.intensity, r.c1 * jitter(), r.c2 * jitter(), r.cc * jitter()).unwrap()
                })
                .collect();
            let fit = fit_efficiencies(&noisy, F).unwrap();
            let good = rel(fit.eta1, 0.05) < 0.05
                && rel(fit.eta2, 0.15) < 0.05
                && fit.xi_sq_per_power.iter().zip(&truth).all(|(q, t)| rel(*q, *t) < 0.05);
            ok += good as usize;
        }
        assert!(ok >= 45, "{ok}/50");
    }

    #[test]
    fn order_does_not_matter() {
        let recs = synthetic(0.2, 0.07, &[0.02, 0.2, 0.08, 0.12]);
        let mut shuffled = recs.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        let a = fit_efficiencies(&recs, F).unwrap();
        let b = fit_efficiencies(&shuffled, F).unwrap();
        assert_eq!(a.eta1, b.eta1);
        assert_eq!(a.eta2, b.eta2);
        assert_eq!(a.residual, b.residual);
        for (i, r) in shuffled.iter().enumerate() {
            let j = recs.iter().position(|x| x == r).unwrap();
            assert_eq!(b.xi_sq_per_power[i], a.xi_sq_per_power[j]);
        }
    }

    #[test]
    fn rejections() {
        let one = synthetic(0.05, 0.15, &[0.1]);
        assert!(matches!(fit_efficiencies(&one, F), Err(Error::InsufficientData(_))));
        let two = synthetic(0.05, 0.15, &[0.1, 0.2]);
        assert!(fit_efficiencies(&two, 0.0).is_err());
        assert!(CountRecord::new(1.0, -1.0, 1.0, 0.0).is_err());
        assert!(CountRecord::new(1.0, 100.0, 100.0, 500.0).is_err());
        assert!(CountRecord::new(1.0, 100.0, 100.0, 101.0).is_ok());
    }
}
