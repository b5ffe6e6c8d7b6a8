use proptest::prelude::*;
use shocklab::rng::{SeedSpec, STREAM_TABLE};
use shocklab::shock::{shock_constants, Observable};
use shocklab::tw::*;
use std::sync::OnceLock;

// mpmath at 30 digits: (x, Ai(x), Ai'(x))
const AIRY: &[(f64, f64, f64)] = &[
    (-30.0, -0.087968188456842163, 1.2286206026374851),
    (-12.0, -0.066555175054373129, 1.0231104533679707),
    (-8.0, -0.052705050356386203, 0.93556093819830655),
    (-6.5, -0.2380203019971158, -0.67495249251320217),
    (-6.2, -0.35642107366896142, -0.081068556196304551),
    (-3.0, -0.37881429367765807, 0.31458376921659881),
    (-1.0, 0.53556088329235212, -0.010160567116645209),
    (0.0, 0.35502805388781724, -0.2588194037928068),
    (0.5, 0.23169360648083349, -0.22491053266468389),
    (1.0, 0.13529241631288142, -0.15914744129679321),
    (3.0, 0.0065911393574607191, -0.011912976705951318),
    (5.0, 0.00010834442813607442, -0.00024741389086846248),
    (6.3, 4.6722608205742893e-6, -1.1905970459957276e-5),
    (6.8, 1.2758794168766687e-6, -3.3724647753763934e-6),
    (10.0, 1.1047532552898686e-10, -3.5206336767389236e-10),
    (20.0, 1.6916728686705403e-27, -7.586391625748355e-27),
    (35.0, 1.2981999731218427e-61, -7.6894996836291995e-61),
];

// Fredholm determinants on truncated intervals with 240 Gauss-Legendre
// nodes and library Airy values: (s, F_GUE(s), F_GOE(s))
const TW: &[(f64, f64, f64)] = &[
    (-4.0, 0.003544553595509029, 0.007567678598794727),
    (-2.0, 0.41322414250513023, 0.2743201979092239),
    (-1.0, 0.8072142419992896, 0.5837898955197404),
    (0.0, 0.9693728283552645, 0.8319080662029585),
    (1.0, 0.9975054381493895, 0.9514212369115531),
    (2.0, 0.9998875536983096, 0.9895975710848274),
    (4.0, 0.9999999504208795, 0.9997796555125664),
];

fn goe_table() -> &'static DistTable {
    static T: OnceLock<DistTable> = OnceLock::new();
    T.get_or_init(|| DistTable::default_goe(DEFAULT_ORDER).unwrap())
}

fn gue_table() -> &'static DistTable {
    static T: OnceLock<DistTable> = OnceLock::new();
    T.get_or_init(|| DistTable::default_gue(DEFAULT_ORDER).unwrap())
}

#[test]
fn airy_matches_high_precision_values() {
    for &(x, ai, aip) in AIRY {
        let (a, d) = airy_pair(x).unwrap();
        // absolute accuracy where the series cancels, relative in the far right tail
        let tol = |v: f64| if x >= 7.0 { 1e-9 * v.abs() } else { 1e-10 };
        assert!((a - ai).abs() <= tol(ai), "Ai({x}) = {a} vs {ai}");
        assert!((d - aip).abs() <= tol(aip), "Ai'({x}) = {d} vs {aip}");
    }
}

#[test]
fn airy_at_zero_and_decay() {
    assert!((airy_ai(0.0).unwrap() - 0.3550280539).abs() < 1e-10);
    let (a3, a4, a5) = (airy_ai(3.0).unwrap(), airy_ai(4.0).unwrap(), airy_ai(5.0).unwrap());
    assert!(a5 < a4 && a4 < a3 && a5 > 0.0);
}

#[test]
fn first_airy_zero_by_bisection() {
    let (mut lo, mut hi) = (-2.5, -2.2);
    assert!(airy_ai(lo).unwrap() < 0.0 && airy_ai(hi).unwrap() > 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if airy_ai(mid).unwrap() < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - (-2.338107410459767)).abs() < 1e-10);
}

#[test]
fn determinants_match_truncated_interval_quadrature() {
    for &(s, gue, goe) in TW {
        assert!((f_gue_cdf(s, DEFAULT_ORDER).unwrap() - gue).abs() < 1e-10, "GUE at {s}");
        assert!((f_goe_cdf(s, DEFAULT_ORDER).unwrap() - goe).abs() < 1e-10, "GOE at {s}");
    }
}

#[test]
fn two_goe_kernel_forms_agree() {
    for k in -20..=12 {
        let s = k as f64 * 0.5;
        let a = f_goe_cdf(s, DEFAULT_ORDER).unwrap();
        let b = f_goe_cdf_scaled_kernel(s, DEFAULT_ORDER).unwrap();
        assert!((a - b).abs() < 1e-10, "s = {s}: {a} vs {b}");
    }
}

#[test]
fn scaling_factor_inserted_either_way() {
    // F_GOE(2^{2/3} s / sigma) by scaling the argument and by moving the
    // kernel window to 2^{-1/3} s / sigma
    let sigma = 3.051306111175712;
    for k in -10..=10 {
        let s = k as f64 * 0.7;
        let by_argument = f_goe_cdf(2f64.powf(2.0 / 3.0) * s / sigma, DEFAULT_ORDER).unwrap();
        let by_window = goe_window_det(2f64.powf(-1.0 / 3.0) * s / sigma, DEFAULT_ORDER).unwrap();
        assert!((by_argument - by_window).abs() < 1e-8);
    }
}

#[test]
fn right_tail_limits() {
    assert!((f_gue_cdf(6.0, DEFAULT_ORDER).unwrap() - 1.0).abs() < 1e-6);
    // the GOE right tail at 6 is 1.94e-6 (independent quadrature value)
    assert!((f_goe_cdf(6.0, DEFAULT_ORDER).unwrap() - 0.999998059185927).abs() < 1e-10);
    assert!((f_goe_cdf(8.0, DEFAULT_ORDER).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn order_doubling_is_stable() {
    for k in 0..=32 {
        let s = -10.0 + k as f64 * 0.5;
        for f in [f_gue_cdf, f_goe_cdf] {
            let d = (f(s, 64).unwrap() - f(s, 128).unwrap()).abs();
            assert!(d < 1e-8, "s = {s}: {d}");
        }
    }
}

#[test]
fn tables_are_proper_cdfs() {
    for t in [gue_table(), goe_table()] {
        let c = t.cdf_values();
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
        assert!(c[0] < 1e-6 && 1.0 - c[c.len() - 1] < 1e-6);
        assert!((t.density_mass() - 1.0).abs() < 1e-6, "{}", t.density_mass());
    }
}

#[test]
fn moments_match_known_values() {
    let (g, o) = (gue_table(), goe_table());
    assert!((g.mean() - (-1.771086807)).abs() < 1e-3, "{}", g.mean());
    assert!((g.variance() - 0.813194792).abs() < 1e-3, "{}", g.variance());
    assert!((o.mean() - (-1.2065335745)).abs() < 2e-3, "{}", o.mean());
    assert!((o.variance() - 1.6077810345).abs() < 5e-3, "{}", o.variance());
}

#[test]
fn inverse_transform_samples_follow_the_table() {
    let t = goe_table();
    let key = SeedSpec::new(11, STREAM_TABLE);
    let n = 1_000_000u64;
    let mut xs = t.sample((0..n).map(|k| key.uniform(k)));
    xs.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let f = t.cdf(x);
        ks = ks.max((f - k as f64 / n as f64).abs()).max(((k + 1) as f64 / n as f64 - f).abs());
    }
    assert!(ks <= 0.002, "{ks}");
}

#[test]
fn combination_with_zero_second_coefficient_is_the_base_law() {
    let t = goe_table();
    let c = combination_cdf(1.0, 0.0, t, t.s_grid()).unwrap();
    for (a, b) in c.cdf_values().iter().zip(t.cdf_values()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn symmetric_limit_law_has_consistent_median() {
    let sc = shock_constants(0.25, 0.75).unwrap();
    let (a, b) = sc.limit_coefficients(Observable::X);
    let t = goe_table();
    let grid = combination_grid(a, b, t, GRID_STEP);
    let one = combination_cdf(a, b, t, &grid).unwrap();
    let two = combination_cdf(b, a, t, &grid).unwrap();
    assert!((one.quantile(0.5) - two.quantile(0.5)).abs() < 1e-6);
}

#[test]
fn limit_law_means_are_linear() {
    let t = goe_table();
    for (l, r) in [(0.25, 0.75), (0.2, 0.6)] {
        let sc = shock_constants(l, r).unwrap();
        for which in [Observable::X, Observable::N] {
            let (a, b) = sc.limit_coefficients(which);
            let law = limit_law_cdf(which, &sc, t, None).unwrap();
            let expect = (a + b) * t.mean();
            assert!((law.mean() - expect).abs() < 1e-3, "({l},{r}) {which:?}: {} vs {expect}", law.mean());
            let c = law.cdf_values();
            assert!(c[0] < 1e-6 && 1.0 - c[c.len() - 1] < 1e-6);
        }
    }
}

#[test]
fn csv_has_header_and_rows() {
    let t = DistTable::gue(&uniform_grid(-2.0, 2.0, 0.5), 16).unwrap();
    let csv = t.to_csv();
    assert!(csv.starts_with("s,cdf\n"));
    assert_eq!(csv.lines().count(), 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn interpolated_cdf_is_monotone(a in -11.0f64..9.0, b in -11.0f64..9.0) {
        let t = goe_table();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(t.cdf(lo) <= t.cdf(hi));
    }

    #[test]
    fn quantile_inverts_the_cdf(u in 0.001f64..0.999) {
        let t = gue_table();
        prop_assert!((t.cdf(t.quantile(u)) - u).abs() < 1e-9);
    }
}
