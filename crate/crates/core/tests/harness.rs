use proptest::prelude::*;
use shocklab::harness::*;
use shocklab::rng::{SeedSpec, STREAM_TABLE};
use shocklab::shock::Observable;
use shocklab::Error;

fn exp_samples(n: u64, seed: u64) -> Vec<f64> {
    let key = SeedSpec::new(seed, STREAM_TABLE);
    sorted(&(0..n).map(|k| -(1.0 - key.uniform(k)).ln()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn config_validation() {
    let ok = ExperimentConfig::new("a", 0.25, 0.75, 10.0, 1, 0);
    assert!(ok.validate().is_ok());
    let mut c = ok.clone();
    c.replicas = 0;
    assert!(matches!(run_shock_experiment(&c, 1), Err(Error::InvalidParameter(_))));
    let mut c = ok.clone();
    c.t = 0.0;
    assert!(c.validate().is_err());
    let mut c = ok.clone();
    c.rho = 0.2;
    assert!(c.validate().is_err());
    assert!(run_shock_experiment(&ok, 0).is_err());
}

#[test]
fn single_replica_is_deterministic() {
    let cfg = ExperimentConfig::new("one", 0.25, 0.75, 50.0, 1, 9);
    let a = run_shock_experiment(&cfg, 1).unwrap();
    let b = run_shock_experiment(&cfg, 1).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.samples.len(), 1);
}

#[test]
fn csv_is_identical_across_worker_counts() {
    for engine in [Engine::Interface, Engine::Direct] {
        let mut cfg = ExperimentConfig::new("w", 0.2, 0.6, 40.0, 24, 3);
        cfg.engine = engine;
        let one = samples_csv(&rows(&run_shock_experiment(&cfg, 1).unwrap())).unwrap();
        let eight = samples_csv(&rows(&run_shock_experiment(&cfg, 8).unwrap())).unwrap();
        assert_eq!(sha256_hex(&one), sha256_hex(&eight), "{engine:?}");
    }
}

#[test]
fn engines_agree_in_distribution() {
    let mut cfg = ExperimentConfig::new("e", 0.25, 0.75, 100.0, 400, 11);
    let a = run_shock_experiment(&cfg, 1).unwrap();
    cfg.engine = Engine::Direct;
    cfg.master_seed = 12;
    let b = run_shock_experiment(&cfg, 1).unwrap();
    for which in [Observable::X, Observable::N] {
        let d = ks_two_sample(&sorted(&a.values(which)).unwrap(), &sorted(&b.values(which)).unwrap()).unwrap();
        // 0.1% critical value for two samples of 400 is 1.95 sqrt(2/400) = 0.138
        assert!(d < 0.138, "{which:?}: {d}");
    }
}

#[test]
fn ks_at_reference_quantiles_is_order_one_over_n() {
    for n in [10usize, 100, 1000] {
        let xs: Vec<f64> = (1..=n).map(|k| k as f64 / (n as f64 + 1.0)).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d <= 1.0 / n as f64 + 1e-12, "{n}: {d}");
    }
}

#[test]
fn ks_exponential_calibration() {
    let xs = exp_samples(10_000, 1);
    let same = ks_statistic(&xs, |x| 1.0 - (-x).exp()).unwrap();
    assert!(same <= 0.02, "{same}");
    // sup |e^{-x} - e^{-2x}| = 1/4 at x = ln 2
    let other = ks_statistic(&xs, |x| 1.0 - (-2.0 * x).exp()).unwrap();
    assert!(other >= 0.15 && (other - 0.25).abs() < 0.02, "{other}");
    let r = KsReport::new(other, xs.len(), "exp2", 0.1);
    assert!(!r.pass);
    assert!(KsReport::new(0.1, 5, "x", 0.1).pass);
}

#[test]
fn ks_rejects_bad_input() {
    assert!(matches!(ks_statistic(&[0.2, 0.1], |x| x), Err(Error::Invariant(_))));
    assert!(ks_statistic(&[0.2], |x| x).is_err());
    assert!(ks_statistic(&[0.1, f64::NAN], |x| x).is_err());
    assert!(ks_two_sample(&[0.3, 0.1], &[0.1, 0.2]).is_err());
}

#[test]
fn two_sample_extremes() {
    let a = [0.1, 0.2, 0.3];
    assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    assert_eq!(ks_two_sample(&a, &[1.0, 2.0]).unwrap(), 1.0);
}

#[test]
fn scaling_fit_recovers_exact_power_laws() {
    let ts = [250.0, 500.0, 1000.0, 2000.0];
    for (p, c) in [(2.0 / 3.0, 0.7), (1.0, 3.0)] {
        let pts: Vec<(f64, f64)> = ts.iter().map(|&t| (t, c * f64::powf(t, p))).collect();
        let f = scaling_exponent_fit(&pts, 200, 1).unwrap();
        assert!((f.slope - p).abs() < 1e-12);
        assert!((f.ci_low - p).abs() < 1e-12 && (f.ci_high - p).abs() < 1e-12);
        assert!((f.intercept - f64::ln(c)).abs() < 1e-10);
    }
}

#[test]
fn scaling_fit_rejects_bad_data() {
    assert!(matches!(scaling_exponent_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)], 10, 0), Err(Error::Data(_))));
    assert!(scaling_exponent_fit(&[(1.0, 1.0), (2.0, 2.0)], 10, 0).is_err());
    assert!(scaling_exponent_fit(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)], 10, 0).is_err());
}

#[test]
fn scaling_fit_from_samples_brackets_the_exponent() {
    // scaled uniforms: variance t^{2/3} / 12 up to sampling noise
    let data: Vec<(f64, Vec<f64>)> = [250.0, 500.0, 1000.0, 2000.0]
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let key = SeedSpec::new(100 + k as u64, STREAM_TABLE);
            (t, (0..4000).map(|i| f64::cbrt(t) * key.uniform(i)).collect())
        })
        .collect();
    let f = scaling_fit_from_samples(&data, 300, 5).unwrap();
    assert!(f.ci_low <= f.slope && f.slope <= f.ci_high);
    assert!(f.ci_low < 2.0 / 3.0 && 2.0 / 3.0 < f.ci_high, "{f:?}");
    assert!(f.ci_high - f.ci_low < 0.1);
}

fn small_set() -> SampleSet {
    run_shock_experiment(&ExperimentConfig::new("p", 0.25, 0.75, 30.0, 12, 4), 2).unwrap()
}

#[test]
fn empty_set_gives_header_only_csv() {
    let mut set = small_set();
    set.samples.clear();
    let bytes = samples_csv(&rows(&set)).unwrap();
    assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "replica,t,lambda,rho,x_t,n_t,x_rescaled,n_rescaled\n");
    assert!(parse_samples_csv(&bytes).unwrap().is_empty());
    let s = Summary::new(&set, vec![], vec![]).unwrap();
    assert!(s.x_moments.is_none());
}

#[test]
fn persist_round_trips_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let set = small_set();
    let summary = Summary::new(&set, vec![KsReport::new(0.05, 12, "ref", 0.1)], vec![("K".into(), "V".into())]).unwrap();
    let a = persist(&set, &summary, dir.path(), SampleFormat::Csv).unwrap();
    let back = read_samples(&a.samples).unwrap();
    assert_eq!(back.iter().map(SampleRow::sample).collect::<Vec<_>>(), set.samples);
    assert_eq!(read_summary(&a.summary).unwrap(), summary);
    let h1 = (sha256_hex(&std::fs::read(&a.samples).unwrap()), sha256_hex(&std::fs::read(&a.summary).unwrap()));
    let b = persist(&set, &summary, &dir.path().join("again"), SampleFormat::Csv).unwrap();
    let h2 = (sha256_hex(&std::fs::read(&b.samples).unwrap()), sha256_hex(&std::fs::read(&b.summary).unwrap()));
    assert_eq!(h1, h2);
    assert_eq!(h1.0, summary.samples_sha256);
    let j = persist(&set, &summary, &dir.path().join("json"), SampleFormat::Json).unwrap();
    let parsed: Vec<SampleRow> = serde_json::from_slice(&std::fs::read(&j.samples).unwrap()).unwrap();
    assert_eq!(parsed, rows(&set));
}

#[test]
fn persist_reports_the_failing_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let set = small_set();
    let summary = Summary::new(&set, vec![], vec![]).unwrap();
    match persist(&set, &summary, &blocker.join("sub"), SampleFormat::Csv) {
        Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
        other => panic!("{other:?}"),
    }
}

fn brute_ks(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .map(|&x| {
            let le = xs.iter().filter(|&&y| y <= x).count() as f64 / n;
            let lt = xs.iter().filter(|&&y| y < x).count() as f64 / n;
            (le - cdf(x)).abs().max((lt - cdf(x)).abs())
        })
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn ks_matches_the_definition(raw in prop::collection::vec(0u8..40, 2..60)) {
        let xs = sorted(&raw.iter().map(|&v| f64::from(v) / 40.0).collect::<Vec<_>>()).unwrap();
        let d = ks_statistic(&xs, |x| x).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - brute_ks(&xs, |x| x)).abs() < 1e-12);
    }

    #[test]
    fn two_sample_is_symmetric(a in prop::collection::vec(0u8..20, 2..40), b in prop::collection::vec(0u8..20, 2..40)) {
        let a = sorted(&a.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()).unwrap();
        let b = sorted(&b.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()).unwrap();
        let d = ks_two_sample(&a, &b).unwrap();
        prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
        // oracle: sup over all sample points of |F_a - F_b|
        let f = |s: &[f64], x: f64| s.iter().filter(|&&y| y <= x).count() as f64 / s.len() as f64;
        let brute = a.iter().chain(&b).map(|&x| (f(&a, x) - f(&b, x)).abs()).fold(0.0, f64::max);
        prop_assert!((d - brute).abs() < 1e-12);
    }
}
