use proptest::prelude::*;
use shocklab::lpp::{lpp_point_to_point, Point, Rect, TableWeights, Weights};
use shocklab::rng::{replica_seed, SeedSpec, STREAM_BULK};
use shocklab::shock::shock_constants;
use shocklab::stationary::*;
use shocklab::Error;

fn seed(master: u64, r: u64) -> SeedSpec {
    SeedSpec::new(replica_seed(master, r), STREAM_BULK)
}

/// `omega(k)` straight from the defining sums, with the column of row `k`
/// computed independently of the library.
fn omega_direct(d: f64, varrho: f64, k: i64, s: SeedSpec) -> f64 {
    let m = ((d - 1.0) * k as f64 / d + 1e-9).floor() as i64;
    let p = |i| p_weight(s, varrho, i);
    let q = |i| q_weight(s, varrho, i);
    match k.signum() {
        0 => 0.0,
        1 => -(m + 1..=0).map(p).sum::<f64>() + (1..=k).map(q).sum::<f64>(),
        _ => (1..=m).map(p).sum::<f64>() - (k + 1..=0).map(q).sum::<f64>(),
    }
}

#[test]
fn omega_vanishes_at_zero() {
    for r in 0..20 {
        let bw = boundary_weights(0.3, 0.6, (-50, 50), seed(1, r)).unwrap();
        assert_eq!(bw.value(0), Some(0.0));
    }
}

#[test]
fn omega_two_on_the_antidiagonal() {
    let s = seed(2, 0);
    let bw = boundary_weights(0.5, 0.4, (-3, 3), s).unwrap();
    let p = |i| p_weight(s, 0.4, i);
    let q = |i| q_weight(s, 0.4, i);
    // two columns and two rows between (0,0) and (-2,2)
    let expect = -(p(0) + p(-1)) + (q(1) + q(2));
    assert!((bw.value(2).unwrap() - expect).abs() < 1e-12);
}

#[test]
fn omega_mean_matches_direct_summation() {
    // at lambda_line = varrho the two sums nearly cancel
    let (d, varrho, k) = (0.25, 0.25, 100i64);
    let draws = 10_000u64;
    let m = ((d - 1.0) * k as f64 / d + 1e-9).floor() as i64;
    let mean_exact = k as f64 / varrho + m as f64 / (1.0 - varrho);
    let var = k as f64 / varrho.powi(2) + (-m) as f64 / (1.0 - varrho).powi(2);
    let mut acc = 0.0;
    for r in 0..draws {
        let s = seed(3, r);
        let v = boundary_weights(d, varrho, (0, k), s).unwrap().value(k).unwrap();
        assert!((v - omega_direct(d, varrho, k, s)).abs() < 1e-9);
        acc += v;
    }
    let mean = acc / draws as f64;
    let se = (var / draws as f64).sqrt();
    assert!((mean - mean_exact).abs() < 4.0 * se, "{mean} vs {mean_exact} (se {se})");
    assert!((mean_exact / k as f64).abs() < 0.05);
}

#[test]
fn invalid_varrho_is_rejected() {
    assert!(matches!(boundary_weights(0.5, 1.0, (-1, 1), seed(0, 0)), Err(Error::InvalidParameter(_))));
    assert!(matches!(boundary_weights(0.5, 0.5, (1, 3), seed(0, 0)), Err(Error::InvalidParameter(_))));
}

#[test]
fn singleton_line_is_point_to_point() {
    let f = bulk_field(seed(4, 0));
    let bw = BoundaryWeightSeq::from_values(0.5, 0.5, 0, vec![0.0]).unwrap();
    for t in [Point::new(5, 7), Point::new(20, 3), Point::new(0, 0)] {
        let s = stationary_lpp_truncated(&f, &bw, t).unwrap();
        let p = lpp_point_to_point(&f, Point::new(0, 0), t, false).unwrap().value().unwrap();
        assert_eq!(s.value, p);
        assert_eq!(s.exit, 0);
    }
}

#[test]
fn truncated_argmax_is_a_window_overflow() {
    let f = bulk_field(seed(5, 0));
    let bw = BoundaryWeightSeq::from_values(0.5, 0.5, 0, vec![0.0]).unwrap();
    assert!(matches!(stationary_lpp(&f, &bw, Point::new(20, 20)), Err(Error::WindowOverflow(_))));
}

#[test]
fn automatic_window_matches_a_wide_window() {
    let n = 200.0;
    let t = Point::new(50, 50);
    for r in 0..20 {
        let s = seed(6, r);
        let f = bulk_field(s);
        let auto = LineModel::stationary(0.5, 0.5, s).solve_around(&f, &[t], n).unwrap()[0];
        let bw = boundary_weights(0.5, 0.5, (-50, 50), s).unwrap();
        let wide = stationary_lpp(&f, &bw, t).unwrap();
        assert_eq!(auto, wide);
    }
}

#[test]
fn horizontal_increments_off_the_antidiagonal() {
    // on a line of density 1/4 the start points are sparse; measure the
    // increment law there too (DKW band at level 1e-3 for 2000 samples)
    let (d, varrho, n) = (0.25, 0.4, 300.0);
    let t = Point::new(((1.0f64 - varrho).powi(2) * n) as i64, (varrho * varrho * n) as i64);
    let reps = 2000;
    let mut hs = Vec::with_capacity(reps);
    for r in 0..reps as u64 {
        let s = seed(7, r);
        let f = bulk_field(s);
        let o = LineModel::stationary(d, varrho, s).solve_around(&f, &[t, Point::new(t.i + 1, t.j)], n).unwrap();
        hs.push(o[1].value - o[0].value);
    }
    hs.sort_by(f64::total_cmp);
    let nn = reps as f64;
    let ks = hs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = 1.0 - (-(1.0 - varrho) * x).exp();
            (f - k as f64 / nn).abs().max(((k + 1) as f64 / nn - f).abs())
        })
        .fold(0.0, f64::max);
    let band = ((2.0f64 / 1e-3).ln() / (2.0 * nn)).sqrt();
    println!("density 1/4 increment KS = {ks:.4} (band {band:.4})");
    assert!(ks < band);
}

/// Every up-right path from `from` to `to`, summing weights after the first
/// cell.
fn enumerate_best<W: Weights>(w: &W, from: Point, to: Point) -> Option<f64> {
    if from.i > to.i || from.j > to.j {
        return None;
    }
    fn rec<W: Weights>(w: &W, p: Point, to: Point) -> f64 {
        if p == to {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        if p.i < to.i {
            let q = Point::new(p.i + 1, p.j);
            best = best.max(w.weight(q.i, q.j) + rec(w, q, to));
        }
        if p.j < to.j {
            let q = Point::new(p.i, p.j + 1);
            best = best.max(w.weight(q.i, q.j) + rec(w, q, to));
        }
        best
    }
    Some(rec(w, from, to))
}

/// Value and exit over the rows `ks` (ties go to the larger row).
fn enumerate_line<W: Weights>(w: &W, ks: &[i64], boundary: impl Fn(i64) -> f64, to: Point) -> (f64, i64) {
    let mut best = (f64::NEG_INFINITY, i64::MIN);
    for &k in ks {
        if let Some(v) = enumerate_best(w, Point::new(-k, k), to) {
            let v = v + boundary(k);
            if v > best.0 || (v == best.0 && k > best.1) {
                best = (v, k);
            }
        }
    }
    best
}

#[test]
fn coupling_matches_path_enumeration_on_small_tables() {
    // antidiagonal rows -4..=4, targets (3,1) and (4,0); integer weights
    let rect = Rect::new(-4, 4, -4, 4);
    let (p1, p2) = (Point::new(3, 1), Point::new(4, 0));
    let mut premises = 0;
    for r in 0..300u64 {
        let s = seed(8, r);
        let w = TableWeights::from_fn(rect, |i, j| (s.uniform(((i + 8) * 32 + j + 8) as u64) * 6.0).floor()).unwrap();
        let vals: Vec<f64> = (-4..=4).map(|k: i64| if k == 0 { 0.0 } else { (s.with_stream(9).uniform((k + 8) as u64) * 9.0).floor() - 4.0 }).collect();
        let bw = BoundaryWeightSeq::from_values(0.5, 0.5, -4, vals.clone()).unwrap();
        let c = coupling_inequality_check(&w, &bw, p1, p2).unwrap();
        let all: Vec<i64> = (-4..=4).collect();
        let half: Vec<i64> = (0..=4).collect();
        let b = |k: i64| vals[(k + 4) as usize];
        let s1 = enumerate_line(&w, &all, b, p1);
        let s2 = enumerate_line(&w, &all, b, p2);
        let h1 = enumerate_line(&w, &half, |_| 0.0, p1);
        let h2 = enumerate_line(&w, &half, |_| 0.0, p2);
        assert_eq!((c.stationary[0].value, c.stationary[0].exit), s1);
        assert_eq!((c.stationary[1].value, c.stationary[1].exit), s2);
        assert_eq!((c.half_line[0].value, c.half_line[0].exit), h1);
        assert_eq!((c.half_line[1].value, c.half_line[1].exit), h2);
        if s1.1 <= h2.1 {
            premises += 1;
            assert!(h2.0 - h1.0 <= s2.0 - s1.0);
        }
        if h1.1 <= s2.1 {
            premises += 1;
            assert!(s2.0 - s1.0 <= h2.0 - h1.0);
        }
        assert!(!c.violated());
    }
    assert!(premises > 100, "{premises}");
}

#[test]
fn equal_targets_collapse_the_inequalities() {
    let f = bulk_field(seed(9, 0));
    let bw = boundary_weights(0.5, 0.5, (-200, 200), seed(9, 0)).unwrap();
    let p = Point::new(60, 60);
    let c = coupling_inequality_check(&f, &bw, p, p).unwrap();
    assert!(c.upside_holds && c.downside_holds && !c.violated());
}

#[test]
fn random_instances_have_no_violations() {
    let sc = shock_constants(0.25, 0.75).unwrap();
    let n = 500.0;
    let (lm, lp) = shifted_densities(sc.lambda, 1.0, n).unwrap();
    for v in [lm, lp] {
        let s = coupling_trials(&sc, n, v, n.cbrt(), 2.0 * n.cbrt(), 100, 10).unwrap();
        assert_eq!(s.violations, 0, "{s:?}");
        assert!(s.upside_premises + s.downside_premises > 0);
    }
    assert!(coupling_trials(&sc, n, lm, 2.0, 1.0, 1, 0).is_err());
}

#[test]
fn exits_decrease_along_the_target_line() {
    // row indices: moving P(x) right-down moves the exit to smaller rows
    let sc = shock_constants(0.25, 0.75).unwrap();
    let n = 300.0;
    let xs: Vec<f64> = (0..=12).map(|k| k as f64 * 2.0).collect();
    let pts: Vec<Point> = xs.iter().map(|&x| p_of_x(&sc, n, x)).collect();
    for r in 0..50 {
        let s = seed(11, r);
        let f = bulk_field(s);
        for model in [LineModel::lambda_half_line(0.25), LineModel::stationary(0.25, 0.3, s)] {
            let out = model.solve_around(&f, &pts, n).unwrap();
            assert!(out.windows(2).all(|w| w[0].exit >= w[1].exit), "{out:?}");
        }
    }
}

#[test]
fn sandwich_holds_on_the_good_event() {
    let sc = shock_constants(0.25, 0.75).unwrap();
    let n = 500.0;
    let u: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
    let mut good = 0;
    for r in 0..100 {
        let g = good_event_sample(&sc, n, 0.5, 1.0, &u, seed(12, r)).unwrap();
        if g.holds {
            good += 1;
            assert!(g.sandwich_holds());
        }
    }
    assert!(good > 50);
}

#[test]
fn good_event_parameters_are_checked() {
    let sc = shock_constants(0.25, 0.75).unwrap();
    assert!(matches!(good_event_probability(&sc, 500.0, 8.0, 1.0, 1, 0), Err(Error::InvalidParameter(_))));
    assert!(matches!(good_event_probability(&sc, 500.0, 0.0, 1.0, 1, 0), Err(Error::InvalidParameter(_))));
}

#[test]
fn small_r_leaves_a_nontrivial_complement() {
    let sc = shock_constants(0.25, 0.75).unwrap();
    let g = good_event_probability(&sc, 500.0, 0.1, 1.0, 100, 13).unwrap();
    assert!(g.complement > 0.1 && g.complement < 0.9, "{g:?}");
    assert_eq!(g.sandwich_failures, 0);
}

#[test]
fn exit_tails_are_nested_and_flag_truncation() {
    let grid = [0.25, 0.5, 1.0, 2.0, 100.0];
    let prof = exit_tail_profile(200.0, 0.5, 0.5, 1.0, &grid, 200, 14).unwrap();
    assert!(prof.windows(2).all(|w| w[1].probability <= w[0].probability));
    assert!(!prof[0].truncated);
    assert!(prof[4].truncated && prof[4].probability == 0.0);
    let sc = shock_constants(0.25, 0.75).unwrap();
    let half = half_line_exit_tail_profile(&sc, 200.0, 1.0, &grid, 100, 14).unwrap();
    assert!(half.windows(2).all(|w| w[1].probability <= w[0].probability));
    assert!(exit_tail_profile(200.0, 0.5, 0.5, 1.0, &[1.0, 0.5], 1, 0).is_err());
}

fn antidiagonal_pair() -> shocklab::shock::ShockConstants {
    // a line of density 1/2, where the increments along P(x) are exactly i.i.d.
    shock_constants(0.5, 0.75).unwrap()
}

#[test]
fn rescaled_process_starts_at_zero() {
    let sc = antidiagonal_pair();
    let inc = stationary_rescaled_increments(&sc, 512.0, &[0.0, 0.5, 1.0], 1.0, true, seed(15, 0)).unwrap();
    assert_eq!(inc.b[0], 0.0);
    assert_eq!(inc.centred[0], 0.0);
}

#[test]
fn rescaled_increments_are_independent_with_linear_variance() {
    let sc = antidiagonal_pair();
    // N^{1/3} = 4 keeps u N^{1/3} on the lattice
    let n = 64.0;
    let u = [0.5, 1.0, 1.5, 2.0];
    let reps = 10_000u64;
    for plus in [false, true] {
        let (lm, lp) = shifted_densities(sc.lambda, 1.0, n).unwrap();
        let varrho = if plus { lp } else { lm };
        let mut rows = Vec::with_capacity(reps as usize);
        for r in 0..reps {
            rows.push(stationary_rescaled_increments(&sc, n, &u, 1.0, plus, seed(16 + plus as u64, r)).unwrap());
        }
        // disjoint increments [0, 1] and [1, 2]
        let a: Vec<f64> = rows.iter().map(|x| x.b[1]).collect();
        let b: Vec<f64> = rows.iter().map(|x| x.b[3] - x.b[1]).collect();
        let corr = correlation(&a, &b);
        assert!(corr.abs() <= 0.03, "corr {corr}");
        // Var of the centred walk against u
        let vars: Vec<f64> = (0..u.len())
            .map(|k| {
                let xs: Vec<f64> = rows.iter().map(|x| x.centred[k]).collect();
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
            })
            .collect();
        let slope = u.iter().zip(&vars).map(|(a, b)| a * b).sum::<f64>() / u.iter().map(|a| a * a).sum::<f64>();
        let expect = 1.0 / (1.0 - varrho).powi(2) + 1.0 / varrho.powi(2);
        println!("varrho {varrho:.4}: corr {corr:.4}, slope {slope:.4} vs {expect:.4}");
        assert!((slope / expect - 1.0).abs() <= 0.05);
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_values_recompute_from_the_streams(d in 0.05f64..0.95, varrho in 0.05f64..0.95, k in -60i64..60, master in any::<u64>()) {
        let s = SeedSpec::new(master, STREAM_BULK);
        let bw = boundary_weights(d, varrho, (-60, 60), s).unwrap();
        let direct = omega_direct(d, varrho, k, s);
        prop_assert!((bw.value(k).unwrap() - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn boundary_increments_telescope(k in -40i64..40, master in any::<u64>()) {
        // on the antidiagonal each step adds q_k and removes p_{1-k}
        let s = SeedSpec::new(master, STREAM_BULK);
        let v = 0.35;
        let bw = boundary_weights(0.5, v, (-41, 41), s).unwrap();
        let inc = bw.value(k).unwrap() - bw.value(k - 1).unwrap();
        let expect = q_weight(s, v, k) - p_weight(s, v, 1 - k);
        prop_assert!((inc - expect).abs() <= 1e-9 * (1.0 + bw.value(k).unwrap().abs()));
    }
}
