use siphon_core::acceptance::{run, CRITERIA};

fn check(number: usize) {
    let result = run(number);
    println!("{result}");
    assert!(result.passed, "{result}");
}

#[test]
fn criterion_01_phase_bound() {
    check(1);
}

#[test]
fn criterion_02_nominal_visibility() {
    check(2);
}

#[test]
fn criterion_03_loss_explanation() {
    check(3);
}

#[test]
fn criterion_04_fringe_periodicity() {
    check(4);
}

#[test]
fn criterion_05_metrology_threshold() {
    check(5);
}

#[test]
fn criterion_06_multiphoton_degradation() {
    check(6);
}

#[test]
fn criterion_07_series_oracle() {
    check(7);
}

#[test]
fn criterion_08_lift_oracle() {
    check(8);
}

#[test]
fn criterion_09_lossy_unitarity() {
    check(9);
}

#[test]
fn criterion_10_calibration_round_trip() {
    check(10);
}

#[test]
fn criterion_11_reachability() {
    check(11);
}

#[test]
fn every_criterion_has_a_test() {
    assert_eq!(CRITERIA, 11);
}
