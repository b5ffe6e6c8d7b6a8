use shocklab::lpp::Rect;
use shocklab::rng::{SeedSpec, WeightField, STREAM_BULK, STREAM_CLOCKS};
use shocklab::tasep::*;

fn clocks(seed: u64) -> SeedSpec {
    SeedSpec::new(seed, STREAM_CLOCKS)
}

#[test]
fn lone_particle_moves_as_a_poisson_process() {
    let t = 50.0;
    let reps = 10_000u64;
    let cfg = TasepConfig::new(0.5, 0.5, t).unwrap();
    let mut sum = 0.0;
    let mut sq = 0.0;
    for r in 0..reps {
        let mut s = TasepState::from_configuration(cfg, &[], 0).unwrap();
        let d = run_until(&mut s, t, clocks(r)).unwrap().x_t as f64;
        sum += d;
        sq += d * d;
    }
    let mean = sum / reps as f64;
    let se = ((sq / reps as f64 - mean * mean) / reps as f64).sqrt();
    assert!((mean - t).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn blocked_particle_waits_for_the_one_ahead() {
    let cfg = TasepConfig::new(0.5, 0.5, 5.0).unwrap();
    for seed in 0..200 {
        // particle 2 at -3 is blocked by particle 1 at -2; the second-class particle sits far away
        let mut s = TasepState::from_configuration(cfg, &[(1, -2), (2, -3)], 20).unwrap();
        let mut k = 1;
        while k <= 500 {
            run_until(&mut s, k as f64 * 0.01, clocks(seed)).unwrap();
            let p = s.particles();
            let right_moved = p[0].1 != -2;
            let left_moved = p[1].1 != -3;
            assert!(!left_moved || right_moved, "seed {seed}");
            assert!(p[1].1 < p[0].1);
            k += 1;
        }
    }
}

#[test]
fn step_count_is_dominated_by_rate_two() {
    for &t in &[10.0, 100.0] {
        let cfg = TasepConfig::new(0.25, 0.75, t).unwrap();
        let reps = 400u64;
        let mut ns: Vec<i64> = (0..reps)
            .map(|r| {
                let mut s = init_shock_state(cfg).unwrap();
                let smp = run_until(&mut s, t, clocks(r)).unwrap();
                assert_eq!(smp.n_t, s.left_swaps() + s.right_jumps());
                smp.n_t
            })
            .collect();
        ns.sort_unstable();
        let mean = ns.iter().sum::<i64>() as f64 / reps as f64;
        assert!(mean <= 2.0 * t, "mean {mean}");
        // 90% and 99% quantiles of Poisson(2t) via the normal approximation plus a margin
        let sd = (2.0 * t).sqrt();
        for (q, z) in [(0.9, 1.2816), (0.99, 2.3263)] {
            let emp = ns[((q * reps as f64) as usize).min(ns.len() - 1)] as f64;
            assert!(emp <= 2.0 * t + z * sd + 1.0, "t={t} q={q}: {emp}");
        }
    }
}

#[test]
fn discrepancy_starts_at_origin() {
    let cfg = TasepConfig::new(0.25, 0.75, 10.0).unwrap();
    assert_eq!(run_discrepancy(&cfg, 0.0, clocks(1)).unwrap(), 0);
}

#[test]
fn discrepancy_stays_single() {
    // the count is asserted after every event; an error would surface here
    let cfg = TasepConfig::new(0.25, 0.75, 10.0).unwrap();
    for seed in 0..50 {
        for &t in &[1.0, 5.0, 10.0] {
            run_discrepancy(&cfg, t, clocks(seed)).unwrap();
        }
    }
}

#[test]
fn discrepancy_equals_second_class_pathwise() {
    let t = 20.0;
    for &(l, r) in &[(0.25, 0.75), (0.2, 0.6), (0.5, 0.5)] {
        let cfg = TasepConfig::new(l, r, t).unwrap();
        for seed in 0..100 {
            let mut s = init_shock_state(cfg).unwrap();
            let x = run_until(&mut s, t, clocks(seed)).unwrap().x_t;
            assert_eq!(run_discrepancy(&cfg, t, clocks(seed)).unwrap(), x, "seed {seed}");
        }
    }
}

#[test]
fn incremental_and_single_runs_agree() {
    let cfg = TasepConfig::new(0.25, 0.75, 30.0).unwrap();
    let mut a = init_shock_state(cfg).unwrap();
    for k in 1..=30 {
        run_until(&mut a, k as f64, clocks(7)).unwrap();
    }
    let mut b = init_shock_state(cfg).unwrap();
    let sb = run_until(&mut b, 30.0, clocks(7)).unwrap();
    assert_eq!(a.sample(), sb);
    assert!(run_until(&mut b, 10.0, clocks(7)).is_err());
    assert!(run_until(&mut b, 31.0, clocks(7)).is_err());
}

#[test]
fn rescaled_fields_recompute() {
    let s = ShockSample::new(12, 400, 1000.0, 0.25, 0.75);
    assert_eq!(s.x_rescaled, 12.0 / 10.0);
    assert!((s.n_rescaled - (400.0 - 2000.0 * 3.0 / 16.0) / 10.0).abs() < 1e-12);
}

fn line_initial(n: i64, gap: i64) -> Vec<(i64, i64)> {
    (1..=n).map(|k| (k, -gap * k)).collect()
}

#[test]
fn coupling_with_empty_grid_is_vacuous() {
    let f = WeightField::exp1(SeedSpec::new(1, STREAM_BULK), Rect::new(-100, 100, -100, 100)).unwrap();
    let r = verify_lpp_coupling(&f, &line_initial(5, 2), Rect::new(0, 5, 1, 5), &[]).unwrap();
    assert!(r.holds);
    assert_eq!(r.checked, 0);
}

#[test]
fn single_particle_arrivals_are_partial_sums() {
    let f = WeightField::exp1(SeedSpec::new(2, STREAM_BULK), Rect::new(-5, 40, -5, 40)).unwrap();
    let mut tasep = FieldTasep::new(&f, &[(1, 0)], None).unwrap();
    let mut arrival = 0.0;
    for site in 1..=20i64 {
        // the jump into `site` consumes w(site + 1, 1)
        arrival += f.weight_at(site + 1, 1).unwrap();
        tasep.advance_to(arrival - 1e-12).unwrap();
        assert_eq!(tasep.position(1), Some(site - 1));
        tasep.advance_to(arrival).unwrap();
        assert_eq!(tasep.position(1), Some(site));
    }
}

#[test]
fn tasep_and_lpp_agree_on_thirty_particles() {
    let t_grid: Vec<f64> = (1..=20).map(f64::from).collect();
    for seed in 0..100 {
        let f = WeightField::exp1(SeedSpec::new(seed, STREAM_BULK), Rect::new(-200, 200, -200, 200)).unwrap();
        let init: Vec<(i64, i64)> = (1..=30).map(|k| (k, -2 * k + k % 2)).collect();
        let r = verify_lpp_coupling(&f, &init, Rect::new(-30, 30, 1, 30), &t_grid).unwrap();
        assert!(r.holds, "seed {seed}: {:?}", r.counterexample);
    }
}
