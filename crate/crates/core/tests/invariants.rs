//! Property tests over randomized parameters.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use siphon_core::calibration::{count_objective, fit_efficiencies, fit_overlap, CountRecord, VisibilityRecord};
use siphon_core::elements::{ideal_mmi, lossy_mmi, phase_bound_min_phi, MmiModel, ScatteringMatrix};
use siphon_core::experiments::{Circuit, HomExperiment, LossChannelSet};
use siphon_core::fock::{
    apply_to_density, coincidence_probability, lift_scattering, partial_trace, DensityMatrix, PureState,
};
use siphon_core::source::{
    click_probability, count_rates, p_coincidence, p_coincidence_series, p_single, p_single_series, DetectorModel,
    SqueezedSource,
};
use siphon_core::{C64, DEFAULT_REPETITION_RATE};

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]))
}

fn haar(n: usize, seed: u64) -> ScatteringMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ScatteringMatrix::new(q).unwrap()
}

fn random_pure(modes: usize, max_total: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = siphon_core::fock::FockBasis::new(modes, max_total);
    let amps: Vec<(Vec<u32>, C64)> = basis
        .states()
        .iter()
        .map(|s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            (s.occupations().to_vec(), C64::new(re, im))
        })
        .collect();
    let norm: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    PureState::from_amplitudes(modes, max_total, amps.into_iter().map(|(o, a)| (o, a / norm))).unwrap()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn lifted_blocks_are_unitary() {
    runner(24)
        .run(&(2usize..=4, 0usize..=5, any::<u64>()), |(modes, photons, seed)| {
            let op = lift_scattering(&haar(modes, seed), photons).unwrap();
            for n in 0..=photons {
                let b = op.block(n);
                let defect = max_abs(&(b * b.adjoint() - DMatrix::identity(b.nrows(), b.nrows())));
                prop_assert!(defect < 1e-9, "sector {n}: {defect}");
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn unitary_evolution_keeps_trace_and_hermiticity() {
    runner(24)
        .run(&(2usize..=3, 1usize..=4, any::<u64>()), |(modes, photons, seed)| {
            let rho = DensityMatrix::from_pure(&random_pure(modes, photons, seed));
            let op = lift_scattering(&haar(modes, seed ^ 0x5eed), photons).unwrap();
            let out = apply_to_density(&op, &rho).unwrap();
            prop_assert!((out.trace() - rho.trace()).abs() < 1e-10);
            prop_assert!(out.hermiticity_defect() < 1e-10);
            Ok(())
        })
        .unwrap();
}

#[test]
fn partial_trace_order_does_not_matter() {
    runner(16)
        .run(&(1usize..=3, any::<u64>()), |(photons, seed)| {
            let rho = DensityMatrix::from_pure(&random_pure(3, photons, seed));
            let op = lift_scattering(&haar(3, seed.rotate_left(7)), photons).unwrap();
            let rho = apply_to_density(&op, &rho).unwrap();
            let at_once = partial_trace(&rho, &[0, 2]).unwrap();
            let high_first = partial_trace(&partial_trace(&rho, &[2]).unwrap(), &[0]).unwrap();
            let low_first = partial_trace(&partial_trace(&rho, &[0]).unwrap(), &[1]).unwrap();
            prop_assert!(max_abs(&(at_once.entries() - high_first.entries())) < 1e-10);
            prop_assert!(max_abs(&(at_once.entries() - low_first.entries())) < 1e-10);
            Ok(())
        })
        .unwrap();
}

#[test]
fn coincidences_grow_with_doubly_occupied_weight() {
    let strategy = (
        1u32..=3,
        1u32..=3,
        0.0f64..1.0,
        proptest::collection::vec(0.0f64..1.0, 10),
    );
    runner(64)
        .run(&strategy, |(n, m, extra, pops)| {
            let occs = [
                [0, 0],
                [1, 0],
                [0, 1],
                [1, 1],
                [2, 0],
                [0, 2],
                [2, 1],
                [1, 2],
                [3, 0],
                [0, 3],
            ];
            let base: Vec<(Vec<u32>, f64)> = occs.iter().zip(&pops).map(|(o, p)| (o.to_vec(), *p)).collect();
            let before = DensityMatrix::from_populations(2, 6, base.clone()).unwrap();
            let mut more = base;
            more.push((vec![n, m], extra));
            let after = DensityMatrix::from_populations(2, 6, more).unwrap();
            let c0 = coincidence_probability(&before, 0, 1).unwrap().probability;
            let c1 = coincidence_probability(&after, 0, 1).unwrap().probability;
            prop_assert!(c1 >= c0);
            Ok(())
        })
        .unwrap();
}

fn feasible() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..=1.0, 0.0f64..0.5, 0.0f64..=1.0).prop_map(|(eta, alpha, u)| {
        let lo = phase_bound_min_phi(alpha).unwrap();
        (eta, alpha, lo + (2.0 * PI - 2.0 * lo) * u)
    })
}

#[test]
fn lossy_couplers_are_unitary_and_orthogonal() {
    runner(256)
        .run(&feasible(), |(eta, alpha, phi)| {
            let (s, p) = lossy_mmi(eta, alpha, phi).unwrap();
            prop_assert!(s.unitarity_defect() < 1e-9);
            prop_assert!(p.row_orthogonality_residual() < 1e-10);
            Ok(())
        })
        .unwrap();
}

#[test]
fn phase_bound_falls_with_loss() {
    runner(256)
        .run(&(0.0f64..0.5, 0.0f64..0.5), |(a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(phase_bound_min_phi(hi).unwrap() <= phase_bound_min_phi(lo).unwrap());
            Ok(())
        })
        .unwrap();
}

#[test]
fn lossless_balanced_coupler_is_ideal_up_to_phase() {
    let (s, _) = lossy_mmi(0.5, 0.0, PI).unwrap();
    let ideal = ideal_mmi();
    let phase = s.get(0, 0) / ideal.get(0, 0);
    assert!((phase.norm() - 1.0).abs() < 1e-12);
    for i in 0..2 {
        for j in 0..2 {
            assert!((s.get(i, j) - phase * ideal.get(i, j)).norm() < 1e-12);
        }
    }
}

#[test]
fn squeezed_deficit_is_geometric_tail() {
    runner(128)
        .run(&(0.0f64..0.95, 1usize..30), |(xi, n)| {
            let s = SqueezedSource::new(xi, n).unwrap();
            let tail = (xi * xi).powi(n as i32 + 1);
            prop_assert!((s.truncation_deficit() - tail).abs() <= 1e-15 * (1.0 + tail));
            let sum: f64 = s.pair_weights().iter().sum();
            prop_assert!((1.0 - sum - tail).abs() < 1e-13);
            Ok(())
        })
        .unwrap();
}

#[test]
fn click_probability_is_monotone() {
    runner(256)
        .run(&(0u32..20, 0.0f64..1.0, 0.0f64..1.0), |(n, a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(click_probability(n, lo) <= click_probability(n, hi));
            prop_assert!(click_probability(n, a) <= click_probability(n + 1, a));
            Ok(())
        })
        .unwrap();
}

#[test]
fn series_meets_closed_form() {
    runner(256)
        .run(&(0.0f64..=0.5, 0.0f64..=1.0, 0.0f64..=1.0), |(q, e1, e2)| {
            let xi = q.sqrt();
            let n = siphon_core::source::n_max_for_tail(q, 1e-14);
            prop_assert!((p_single(xi, e1).unwrap() - p_single_series(xi, e1, n).unwrap()).abs() < 1e-12);
            let closed = p_coincidence(xi, e1, e2).unwrap();
            prop_assert!((closed - p_coincidence_series(xi, e1, e2, n).unwrap()).abs() < 1e-12);
            prop_assert!(closed <= p_single(xi, e1).unwrap().min(p_single(xi, e2).unwrap()) + 1e-15);
            Ok(())
        })
        .unwrap();
}

/// Mean photon number reaching each detector; the time-bin copies of a mode
/// count towards the same detector.
fn detector_means(rho: &DensityMatrix) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (i, s) in rho.basis().states().iter().enumerate() {
        let p = rho.entries()[(i, i)].re;
        for (k, n) in s.occupations().iter().enumerate() {
            out[k % 2] += p * f64::from(*n);
        }
    }
    out
}

fn click(rho: &DensityMatrix, det: usize) -> f64 {
    rho.basis()
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.occupations().iter().skip(det).step_by(2).any(|&n| n > 0))
        .map(|(i, _)| rho.entries()[(i, i)].re)
        .sum()
}

#[test]
fn interference_leaves_singles_alone() {
    runner(12)
        .run(&(0.0f64..=1.0, 0.0f64..=1.0), |(ea, ed)| {
            let losses = LossChannelSet::new(ea, 1.0, 1.0, ed).unwrap();
            let one = Circuit::hom(&losses, &MmiModel::Ideal, 1, 2).unwrap();
            let two = Circuit::hom(&losses, &MmiModel::Ideal, 2, 2).unwrap();
            let same = one
                .apply(&DensityMatrix::from_pure(&PureState::basis_state(&[1, 1], 2).unwrap()))
                .unwrap();
            let apart = two
                .apply(&DensityMatrix::from_pure(
                    &PureState::basis_state(&[1, 0, 0, 1], 2).unwrap(),
                ))
                .unwrap();
            let (m_same, m_apart) = (detector_means(&same), detector_means(&apart));
            for det in 0..2 {
                prop_assert!((m_same[det] - m_apart[det]).abs() < 1e-9);
            }
            Ok(())
        })
        .unwrap();

    // Threshold clicks do see the bunching: 1/2 against 3/4 without loss.
    let lossless = LossChannelSet::lossless();
    let same = Circuit::hom(&lossless, &MmiModel::Ideal, 1, 2)
        .unwrap()
        .apply(&DensityMatrix::from_pure(&PureState::basis_state(&[1, 1], 2).unwrap()))
        .unwrap();
    let apart = Circuit::hom(&lossless, &MmiModel::Ideal, 2, 2)
        .unwrap()
        .apply(&DensityMatrix::from_pure(
            &PureState::basis_state(&[1, 0, 0, 1], 2).unwrap(),
        ))
        .unwrap();
    assert!((click(&same, 0) - 0.5).abs() < 1e-12);
    assert!((click(&apart, 0) - 0.75).abs() < 1e-12);
}

#[test]
fn equal_loss_commutes_through_the_coupler() {
    runner(8)
        .run(&(0.05f64..=1.0, 0.05f64..0.6), |(eta, xi)| {
            let before =
                HomExperiment::new(LossChannelSet::new(eta, eta, 1.0, 1.0).unwrap(), MmiModel::Ideal, 4).unwrap();
            let after =
                HomExperiment::new(LossChannelSet::new(1.0, 1.0, eta, eta).unwrap(), MmiModel::Ideal, 4).unwrap();
            let (p, q) = (before.at_xi(xi).unwrap(), after.at_xi(xi).unwrap());
            prop_assert!((p.p_i - q.p_i).abs() < 1e-9);
            prop_assert!((p.p_d - q.p_d).abs() < 1e-9);
            for det in 0..2 {
                prop_assert!((p.indistinguishable.p_click(det) - q.indistinguishable.p_click(det)).abs() < 1e-9);
            }
            Ok(())
        })
        .unwrap();
}

fn synthetic_counts(eta1: f64, eta2: f64, xi_sq: &[f64]) -> Vec<CountRecord> {
    let det = DetectorModel::new(eta1, eta2).unwrap();
    xi_sq
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let c = count_rates(q.sqrt(), &det, DEFAULT_REPETITION_RATE).unwrap();
            CountRecord::new(k as f64, c.c1, c.c2, c.cc).unwrap()
        })
        .collect()
}

#[test]
fn count_fit_ignores_record_order() {
    runner(6)
        .run(&(0.02f64..0.5, 0.02f64..0.5, any::<u64>()), |(e1, e2, seed)| {
            let records = synthetic_counts(e1, e2, &[0.01, 0.03, 0.06, 0.1]);
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = fit_efficiencies(&records, DEFAULT_REPETITION_RATE).unwrap();
            let b = fit_efficiencies(&shuffled, DEFAULT_REPETITION_RATE).unwrap();
            prop_assert_eq!(a.eta1, b.eta1);
            prop_assert_eq!(a.eta2, b.eta2);
            prop_assert_eq!(a.residual, b.residual);
            let q: Vec<f64> = records
                .iter()
                .map(|r| a.xi_sq_per_power[r.intensity as usize])
                .collect();
            let obj = count_objective(&records, a.eta1, a.eta2, &q, DEFAULT_REPETITION_RATE);
            let q_shuffled: Vec<f64> = shuffled
                .iter()
                .map(|r| a.xi_sq_per_power[r.intensity as usize])
                .collect();
            let obj_shuffled = count_objective(&shuffled, a.eta1, a.eta2, &q_shuffled, DEFAULT_REPETITION_RATE);
            prop_assert!((obj - obj_shuffled).abs() <= 1e-12 * (1.0 + obj.abs()));
            Ok(())
        })
        .unwrap();
}

#[test]
fn count_fit_round_trips_across_the_box() {
    runner(8)
        .run(&(0.01f64..0.9, 0.01f64..0.9, 0.005f64..0.05), |(e1, e2, q0)| {
            let truth = [q0, 2.0 * q0, 4.0 * q0];
            let fit = fit_efficiencies(&synthetic_counts(e1, e2, &truth), DEFAULT_REPETITION_RATE).unwrap();
            prop_assert!((fit.eta1 / e1 - 1.0).abs() < 1e-4, "eta1 {} vs {}", fit.eta1, e1);
            prop_assert!((fit.eta2 / e2 - 1.0).abs() < 1e-4, "eta2 {} vs {}", fit.eta2, e2);
            for (q, t) in fit.xi_sq_per_power.iter().zip(truth) {
                prop_assert!((q / t - 1.0).abs() < 1e-4);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn overlap_fit_is_a_local_optimum() {
    let exp = HomExperiment::new(LossChannelSet::lossless(), MmiModel::minimal_loss(2.9).unwrap(), 6).unwrap();
    runner(6)
        .run(
            &(0.5f64..1.0, proptest::collection::vec(-0.01f64..0.01, 5)),
            |(alpha, noise)| {
                let records: Vec<VisibilityRecord> = [0.02, 0.05, 0.1, 0.15, 0.2]
                    .iter()
                    .zip(&noise)
                    .map(|(q, e)| {
                        let v = exp.mixture_visibility(f64::sqrt(*q), alpha).unwrap() + e;
                        VisibilityRecord::new(*q, v, None).unwrap()
                    })
                    .collect();
                let fit = fit_overlap(&records, &exp, 3).unwrap();
                let limit = exp.mixture_visibility(1e-5, fit.alpha_ov).unwrap();
                prop_assert!((fit.v_nominal - limit).abs() < 1e-6);
                for k in -10..=10 {
                    let a = (fit.alpha_ov + 0.002 * k as f64).clamp(0.0, 1.0);
                    prop_assert!(fit.residual <= fit.residual_at(a) + 1e-15);
                }
                Ok(())
            },
        )
        .unwrap();
}

#[test]
fn weak_squeezing_matches_analytic_forms() {
    use siphon_core::experiments::{single_photon_reference, squeezed_fringe_point, two_photon_reference};
    let source = SqueezedSource::from_xi_sq(1e-4, 3).unwrap();
    runner(16)
        .run(&(0.0f64..2.0 * PI), |phi| {
            let p = squeezed_fringe_point(phi, &source, &MmiModel::Ideal).unwrap();
            prop_assert!((p.single_threshold - single_photon_reference(phi)).abs() < 1e-3);
            prop_assert!((p.two_photon_threshold - two_photon_reference(phi)).abs() < 1e-3);
            Ok(())
        })
        .unwrap();
    let exp = HomExperiment::new(LossChannelSet::lossless(), MmiModel::Ideal, 3).unwrap();
    runner(16)
        .run(&(0.0f64..=1.0), |alpha| {
            let v = exp.mixture_visibility(1e-2, alpha).unwrap();
            prop_assert!((v - alpha).abs() <= 1e-3 * alpha.max(1e-12));
            Ok(())
        })
        .unwrap();
}
