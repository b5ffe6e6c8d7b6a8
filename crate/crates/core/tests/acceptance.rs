//! Every acceptance criterion at its pinned size and tolerance. Each test
//! prints one PASS/FAIL line.

use shocklab::acceptance::{run, Plan};

fn check(id: u8) {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = run(id, Plan::Full, workers);
    println!("{outcome}");
    assert!(outcome.pass, "{outcome}");
}

#[test]
fn criterion_01_tasep_lpp_equivalence() {
    check(1);
}

#[test]
fn criterion_02_second_class_interface() {
    check(2);
}

#[test]
fn criterion_03_shock_speed() {
    check(3);
}

#[test]
fn criterion_04_fluctuation_exponent() {
    check(4);
}

#[test]
fn criterion_05_limit_laws() {
    check(5);
}

#[test]
fn criterion_06_one_point_goe() {
    check(6);
}

#[test]
fn criterion_07_point_to_point_gue() {
    check(7);
}

#[test]
fn criterion_08_stationarity() {
    check(8);
}

#[test]
fn criterion_09_coupling() {
    check(9);
}

#[test]
fn criterion_10_exit_tails_and_good_event() {
    check(10);
}

#[test]
fn criterion_11_tightness_trend() {
    check(11);
}

#[test]
fn criterion_12_tracy_widom_numerics() {
    check(12);
}

#[test]
fn criterion_13_determinism() {
    check(13);
}
