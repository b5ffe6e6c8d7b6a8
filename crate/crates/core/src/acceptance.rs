//! The acceptance suite: thirteen named experiments, each with a
//! machine-readable pass/fail outcome at fixed tolerances.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{goe_marginal_cdf, lattice_grid, median_sorted, modulus_diagnostic, one_point_samples, pearson, replica};
use crate::error::{Error, Result};
use crate::harness::{ks_statistic, ks_two_sample, limit_law_report, run_shock_experiment, samples_csv, rows, scaling_fit_from_samples, sha256_hex, sorted, ExperimentConfig, SampleSet};
use crate::interface::{field_shock_tasep, interface_until, interface_window, second_class_from_interface, steps_from_interface};
use crate::lpp::{lpp_point_to_point, Point, Rect};
use crate::rng::{SeedSpec, WeightField, STREAM_BULK};
use crate::shock::{shock_constants, speed, Observable, PtPointScaling, ShockConstants, Side};
use crate::stationary::{bulk_field, coupling_trials, exit_tail_profile, good_event_probability, GoodEventReport, LineModel, TailPoint};
use crate::tasep::verify_lpp_coupling;
use crate::tw::{f_goe_cdf, f_gue_cdf, DistTable, DEFAULT_ORDER};

/// Full runs use the pinned sizes; quick runs shrink replicas and scales
/// but keep every threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plan {
    Full,
    Quick,
}

impl Plan {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Plan::Full => full,
            Plan::Quick => quick,
        }
    }
}

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "TASEP-LPP pathwise equivalence"),
    (2, "second-class particle equals competition interface"),
    (3, "shock speed"),
    (4, "fluctuation exponent"),
    (5, "limit laws of X and N"),
    (6, "one-point GOE laws and independence"),
    (7, "point-to-point GUE law"),
    (8, "stationarity of the boundary model"),
    (9, "coupling inequalities"),
    (10, "exit-point tails and good event"),
    (11, "tightness trend"),
    (12, "Tracy-Widom numerics"),
    (13, "determinism across worker counts"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    /// Set when the run stopped on an internal invariant violation.
    pub invariant_violation: bool,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {:>2} {}: {} ({:.1}s)", self.id, self.title, self.detail, self.seconds)
    }
}

/// Runs criterion `id`; errors become a failing outcome.
pub fn run(id: u8, plan: Plan, workers: usize) -> Outcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown criterion", |c| c.1);
    let start = Instant::now();
    let res = match id {
        1 => c1(plan),
        2 => c2(plan),
        3 => c3(plan, workers),
        4 => c4(plan, workers),
        5 => c5(plan, workers),
        6 => c6(plan),
        7 => c7(plan),
        8 => c8(plan),
        9 => c9(plan),
        10 => c10(plan),
        11 => c11(plan),
        12 => c12(),
        13 => c13(plan),
        _ => Err(Error::InvalidParameter(format!("no criterion {id}"))),
    };
    let (pass, detail, invariant_violation) = match res {
        Ok((pass, detail)) => (pass, detail, false),
        Err(e) => (false, format!("error: {e}"), matches!(e, Error::Invariant(_))),
    };
    Outcome {
        id,
        title: title.to_string(),
        pass,
        detail,
        invariant_violation,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(plan: Plan, workers: usize) -> Vec<Outcome> {
    CRITERIA.iter().map(|c| run(c.0, plan, workers)).collect()
}

type Check = Result<(bool, String)>;

/// Shared GOE table at the default order.
pub fn goe() -> Result<&'static DistTable> {
    static T: OnceLock<DistTable> = OnceLock::new();
    if let Some(t) = T.get() {
        return Ok(t);
    }
    let t = DistTable::default_goe(DEFAULT_ORDER)?;
    Ok(T.get_or_init(|| t))
}

/// Shared GUE table at the default order.
pub fn gue() -> Result<&'static DistTable> {
    static T: OnceLock<DistTable> = OnceLock::new();
    if let Some(t) = T.get() {
        return Ok(t);
    }
    let t = DistTable::default_gue(DEFAULT_ORDER)?;
    Ok(T.get_or_init(|| t))
}

/// Shock sample sets shared by criteria 3, 4 and 5 within one process.
fn shock_set(lambda: f64, rho: f64, t: f64, replicas: u64, workers: usize) -> Result<Arc<SampleSet>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<SampleSet>>>> = OnceLock::new();
    let key = format!("{lambda}/{rho}/{t}/{replicas}");
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if let Some(s) = cache.get(&key) {
        return Ok(s.clone());
    }
    // a separate master seed per time keeps the scales independent
    let cfg = ExperimentConfig::new(format!("shock-{lambda}-{rho}-{t}"), lambda, rho, t, replicas, 0x5EED_0000 + t as u64);
    let set = Arc::new(run_shock_experiment(&cfg, workers)?);
    cache.insert(key, set.clone());
    Ok(set)
}

fn c1(plan: Plan) -> Check {
    let seeds = plan.pick(100, 10);
    let t_grid: Vec<f64> = (1..=20).map(f64::from).collect();
    let init: Vec<(i64, i64)> = (1..=30).map(|k| (k, -2 * k + k % 2)).collect();
    let mut checked = 0;
    for seed in 0..seeds {
        let f = WeightField::exp1(SeedSpec::new(seed, STREAM_BULK), Rect::new(-200, 200, -200, 200))?;
        let r = verify_lpp_coupling(&f, &init, Rect::new(-30, 30, 1, 30), &t_grid)?;
        checked += r.checked;
        if !r.holds {
            return Ok((false, format!("seed {seed}: counterexample {:?}", r.counterexample)));
        }
    }
    Ok((true, format!("{seeds} seeds, {checked} events equal")))
}

fn c2(plan: Plan) -> Check {
    let (l, r, t) = (0.25, 0.75, 50.0);
    let seeds = plan.pick(100, 10);
    let mut offsets = BTreeSet::new();
    for seed in 0..seeds {
        let f = WeightField::exp1(SeedSpec::new(seed, STREAM_BULK), Rect::new(-1500, 1500, -1500, 1500))?;
        let ip = interface_until(&f.with_window(interface_window(l, r, 400, 400))?, l, r, t)?;
        let mut tasep = field_shock_tasep(&f, l, r, 400)?;
        tasep.advance_to(t)?;
        let from_ip: Vec<(f64, i64)> = ip
            .steps
            .iter()
            .zip(&ip.times)
            .skip(1)
            .filter(|(_, &tau)| tau <= t)
            .map(|(p, &tau)| (tau, p.i - p.j - 1))
            .collect();
        let traj = tasep.trajectory();
        if traj.len() != from_ip.len() || traj.iter().zip(&from_ip).any(|(a, b)| a.0 != b.0) {
            return Ok((false, format!("seed {seed}: jump times differ")));
        }
        offsets.extend(traj.iter().zip(&from_ip).map(|(a, b)| a.1 - b.1));
        let x = tasep.second_class().map(|s| s.0);
        if x != Some(second_class_from_interface(&ip, t)?) || steps_from_interface(&ip, t)? != tasep.n_steps() {
            return Ok((false, format!("seed {seed}: final position or step count differs")));
        }
    }
    let pass = offsets.len() <= 1;
    Ok((pass, format!("{seeds} seeds, convention offsets {offsets:?}")))
}

fn c3(plan: Plan, workers: usize) -> Check {
    let reps = plan.pick(4000, 500);
    let t = 1000.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (l, r) in [(0.25, 0.75), (0.2, 0.6)] {
        let set = shock_set(l, r, t, reps, workers)?;
        let mean = set.samples.iter().map(|s| s.x_t as f64).sum::<f64>() / (reps as f64 * t);
        let v = speed(l, r);
        pass &= (mean - v).abs() <= 0.01;
        parts.push(format!("({l},{r}) mean X/t = {mean:.4} vs v = {v:.2}"));
    }
    Ok((pass, parts.join("; ")))
}

fn c4(plan: Plan, workers: usize) -> Check {
    let reps = plan.pick(4000, 500);
    let mut data = Vec::new();
    for t in [250.0, 500.0, 1000.0, 2000.0] {
        let set = shock_set(0.25, 0.75, t, reps, workers)?;
        data.push((t, set.samples.iter().map(|s| s.x_t as f64).collect::<Vec<_>>()));
    }
    let fit = scaling_fit_from_samples(&data, 1000, 4)?;
    let pass = (0.5..=0.85).contains(&fit.slope);
    Ok((pass, format!("slope {:.4}, 95% CI [{:.4}, {:.4}]", fit.slope, fit.ci_low, fit.ci_high)))
}

fn c5(plan: Plan, workers: usize) -> Check {
    let reps = plan.pick(4000, 500);
    let goe = goe()?;
    let mut pass = true;
    let mut parts = Vec::new();
    for which in [Observable::X, Observable::N] {
        let mut ks = Vec::new();
        for t in [1000.0, 2000.0] {
            let set = shock_set(0.25, 0.75, t, reps, workers)?;
            let rep = limit_law_report(&set, which, goe, 0.10)?;
            pass &= rep.pass;
            ks.push(rep.ks_statistic);
        }
        pass &= ks[1] <= ks[0];
        parts.push(format!("{which:?}: KS {:.4} at t=1000, {:.4} at t=2000", ks[0], ks[1]));
    }
    Ok((pass, parts.join("; ")))
}

fn c6(plan: Plan) -> Check {
    let sc = shock_constants(0.25, 0.75)?;
    let (n, reps) = plan.pick((1000.0, 5000), (300.0, 500));
    let goe = goe()?;
    let samples = one_point_samples(&sc, n, reps, 0xC6)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    let ks_l = ks_statistic(&sorted(&xs)?, |s| goe_marginal_cdf(goe, sc.sigma(Side::Lambda), s))?;
    let ks_r = ks_statistic(&sorted(&ys)?, |s| goe_marginal_cdf(goe, sc.sigma(Side::Rho), s))?;
    let r = pearson(&xs, &ys);
    let pass = ks_l <= 0.05 && ks_r <= 0.05 && r.abs() <= 0.05;
    Ok((pass, format!("N={n}: KS lambda {ks_l:.4}, KS rho {ks_r:.4}, r = {r:.4}")))
}

/// Rescaled `L_{0 -> (eta N, N)}` over replicas.
pub fn point_to_point_samples(n: i64, eta: f64, replicas: usize, master: u64) -> Result<Vec<f64>> {
    let scaling = PtPointScaling::new(eta)?;
    let target = Point::new((eta * n as f64).floor() as i64, n);
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let f = WeightField::exp1(replica(master, r), Rect::new(0, target.i, 0, target.j))?;
            let v = lpp_point_to_point(&f, Point::new(0, 0), target, false)?
                .value()
                .ok_or_else(|| Error::Invariant("target unreachable from the origin".into()))?;
            Ok(scaling.rescale(v, n as f64))
        })
        .collect()
}

fn c7(plan: Plan) -> Check {
    let (n, reps) = plan.pick((1000i64, 5000usize), (300, 500));
    let values = point_to_point_samples(n, 1.0, reps, 0xC7)?;
    let gue = gue()?;
    let ks = ks_statistic(&sorted(&values)?, |s| gue.cdf(s))?;
    Ok((ks <= 0.05, format!("N={n}: KS vs GUE {ks:.4}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub replicas: usize,
    /// KS of the first horizontal increment against `Exp(1 - varrho)`.
    pub increment_ks: f64,
    /// Correlation of two consecutive horizontal increments.
    pub lag1: f64,
    /// Shift `x` of the target along `(1,-1)`.
    pub shift: i64,
    /// Two-sample KS of `Z(x) + x` against `Z(0)`.
    pub translation_ks: f64,
}

impl StationarityReport {
    pub fn pass(&self) -> bool {
        self.increment_ks <= 0.02 && self.lag1.abs() <= 0.03 && self.translation_ks <= 0.03
    }
}

/// Increment law, lag-1 correlation and exit translation invariance of the
/// stationary model at the target `((1-varrho)^2 N, varrho^2 N)`.
pub fn stationarity_check(n: f64, line: f64, varrho: f64, replicas: usize, master: u64) -> Result<StationarityReport> {
    let t = Point::new(((1.0 - varrho).powi(2) * n) as i64, (varrho * varrho * n) as i64);
    let x = (2.0 * n.cbrt()).round() as i64;
    let targets = [t, Point::new(t.i + 1, t.j), Point::new(t.i + 2, t.j), Point::new(t.i + x, t.j - x)];
    let rows = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let s = replica(master, r);
            let o = LineModel::stationary(line, varrho, s).solve_around(&bulk_field(s), &targets, n)?;
            Ok((o[1].value - o[0].value, o[2].value - o[1].value, o[0].exit as f64, (o[3].exit + x) as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let h1: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let h2: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let z0: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let zx: Vec<f64> = rows.iter().map(|r| r.3).collect();
    Ok(StationarityReport {
        replicas,
        increment_ks: ks_statistic(&sorted(&h1)?, |h| 1.0 - (-(1.0 - varrho) * h).exp())?,
        lag1: pearson(&h1, &h2),
        shift: x,
        translation_ks: ks_two_sample(&sorted(&z0)?, &sorted(&zx)?)?,
    })
}

fn c8(plan: Plan) -> Check {
    let (n, reps) = plan.pick((200.0, 10_000usize), (100.0, 10_000));
    let r = stationarity_check(n, 0.5, 0.5, reps, 0xC8)?;
    Ok((
        r.pass(),
        format!(
            "increment KS {:.4}, lag-1 r = {:.4}, translation KS {:.4} (x = {})",
            r.increment_ks, r.lag1, r.translation_ks, r.shift
        ),
    ))
}

fn c9(plan: Plan) -> Check {
    let sc = shock_constants(0.25, 0.75)?;
    let n: f64 = 500.0;
    let trials = plan.pick(1000, 100);
    let cn = n.cbrt();
    let mut total = 0;
    let mut parts = Vec::new();
    for (sign, master) in [(1.0, 0xC9_01), (-1.0, 0xC9_02)] {
        let varrho = sc.lambda + sign * n.powf(-1.0 / 3.0);
        let s = coupling_trials(&sc, n, varrho, cn, 2.0 * cn, trials, master)?;
        total += s.violations;
        parts.push(format!(
            "varrho {varrho:.4}: {} trials, premises {}/{}, violations {}",
            s.trials, s.upside_premises, s.downside_premises, s.violations
        ));
    }
    Ok((total == 0, parts.join("; ")))
}

/// Least-squares slope and R^2.
fn regression(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRegression {
    pub points: Vec<TailPoint>,
    /// Values of `M` with at least five hits inside the admissible rows.
    pub estimable: Vec<f64>,
    /// Slope and `R^2` of `log P` against `M^2`; `None` below three
    /// estimable values.
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

impl TailRegression {
    pub fn pass(&self) -> bool {
        matches!((self.slope, self.r_squared), (Some(s), Some(r2)) if s < 0.0 && r2 >= 0.8)
    }
}

/// Exit-point tail profile of the stationary model on `M = 1/8, ..., 2`
/// and its regression on `M^2`.
pub fn exit_tail_regression(n: f64, varrho: f64, line: f64, c: f64, replicas: usize, master: u64) -> Result<TailRegression> {
    let m_grid: Vec<f64> = (1..=16).map(|k| 0.125 * k as f64).collect();
    let points = exit_tail_profile(n, varrho, line, c, &m_grid, replicas, master)?;
    let min_hits = 5.0 / replicas as f64;
    let usable: Vec<&TailPoint> = points.iter().filter(|p| !p.truncated && p.probability >= min_hits).collect();
    let (slope, r_squared) = if usable.len() >= 3 {
        let xs: Vec<f64> = usable.iter().map(|p| p.m * p.m).collect();
        let ys: Vec<f64> = usable.iter().map(|p| p.probability.ln()).collect();
        let (s, r2) = regression(&xs, &ys);
        (Some(s), Some(r2))
    } else {
        (None, None)
    };
    Ok(TailRegression {
        estimable: usable.iter().map(|p| p.m).collect(),
        points,
        slope,
        r_squared,
    })
}

/// Good-event complement for each `r`; a shift that leaves `(0,1)` gives an
/// error entry.
pub fn good_event_scan(sc: &ShockConstants, n: f64, rs: &[f64], c: f64, replicas: usize, master: u64) -> Result<Vec<std::result::Result<GoodEventReport, String>>> {
    let mut out = Vec::new();
    for (k, &r) in rs.iter().enumerate() {
        match good_event_probability(sc, n, r, c, replicas, master + k as u64) {
            Ok(g) => out.push(Ok(g)),
            Err(Error::InvalidParameter(msg)) => out.push(Err(msg)),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Complements computable, nonincreasing in `r`, at most `last_max` at the
/// largest `r`, and no sandwich failure on the good event.
pub fn good_event_pass(scan: &[std::result::Result<GoodEventReport, String>], last_max: f64) -> bool {
    let mut prev = f64::INFINITY;
    for g in scan {
        match g {
            Ok(g) if g.complement <= prev && g.sandwich_failures == 0 => prev = g.complement,
            _ => return false,
        }
    }
    prev <= last_max
}

fn c10(plan: Plan) -> Check {
    let n = 500.0;
    let (reps, ge_reps) = plan.pick((4000, 1000), (1000, 200));
    let tail = exit_tail_regression(n, 0.5, 0.5, 1.0, reps, 0xCA)?;
    let mut parts = vec![match (tail.slope, tail.r_squared) {
        (Some(s), Some(r2)) => format!("tail slope {s:.3}, R^2 {r2:.3} over {} values of M", tail.estimable.len()),
        _ => format!("only {} estimable values of M", tail.estimable.len()),
    }];
    let sc = shock_constants(0.5, 0.75)?;
    let scan = good_event_scan(&sc, n, &[1.0, 2.0, 4.0, 8.0], 1.0, ge_reps, 0xCA0)?;
    let shown: Vec<String> = [1, 2, 4, 8]
        .iter()
        .zip(&scan)
        .map(|(r, g)| match g {
            Ok(g) => format!("r={r}: {:.3}", g.complement),
            Err(msg) => format!("r={r}: not computable ({msg})"),
        })
        .collect();
    parts.push(format!("good-event complement {}", shown.join(", ")));
    Ok((tail.pass() && good_event_pass(&scan, 0.05), parts.join("; ")))
}

fn c11(plan: Plan) -> Check {
    let sc = shock_constants(0.25, 0.75)?;
    let (ns, reps) = plan.pick(([500.0, 4000.0], 2000), ([100.0, 800.0], 200));
    let mut med = Vec::new();
    for (k, n) in ns.into_iter().enumerate() {
        let g = lattice_grid(n, 2.0);
        let m = modulus_diagnostic(&sc, n, Side::Lambda, 2.0, &g, &g, reps, 0xCB + k as u64)?;
        med.push(median_sorted(&sorted(&m)?));
    }
    Ok((med[1] < med[0], format!("median sup-increment {:.4} at N={}, {:.4} at N={}", med[0], ns[0], med[1], ns[1])))
}

fn c12() -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..=32 {
        let s = -10.0 + 0.5 * k as f64;
        worst = worst.max((f_gue_cdf(s, 64)? - f_gue_cdf(s, 128)?).abs());
        worst = worst.max((f_goe_cdf(s, 64)? - f_goe_cdf(s, 128)?).abs());
    }
    let (g, o) = (gue()?, goe()?);
    let monotone = [g, o].iter().all(|t| t.cdf_values().windows(2).all(|w| w[1] >= w[0]));
    let limits = [g, o].iter().all(|t| {
        let c = t.cdf_values();
        c[0] < 1e-6 && 1.0 - c[c.len() - 1] < 1e-6
    });
    let pass = worst < 1e-8
        && (g.mean() + 1.771).abs() <= 0.001
        && (o.mean() + 1.2065).abs() <= 0.002
        && (o.variance() - 1.608).abs() <= 0.005
        && monotone
        && limits;
    Ok((
        pass,
        format!(
            "order 64 vs 128 max diff {worst:.2e}; GUE mean {:.5}; GOE mean {:.5}, variance {:.5}; monotone {monotone}, limits {limits}",
            g.mean(),
            o.mean(),
            o.variance()
        ),
    ))
}

fn c13(plan: Plan) -> Check {
    let (t, reps) = plan.pick((1000.0, 200), (200.0, 50));
    let cfg = ExperimentConfig::new("determinism", 0.25, 0.75, t, reps, 0xCD);
    let h: Vec<String> = [1, 8]
        .iter()
        .map(|&w| Ok(sha256_hex(&samples_csv(&rows(&run_shock_experiment(&cfg, w)?))?)))
        .collect::<Result<_>>()?;
    Ok((h[0] == h[1], format!("SHA-256 {} at 1 worker, {} at 8", &h[0][..16], &h[1][..16])))
}
