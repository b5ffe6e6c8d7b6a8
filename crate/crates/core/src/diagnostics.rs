//! Monte Carlo diagnostics of the rescaled last-passage processes around the
//! shock: one-point laws, asymptotic independence, local modulus, the
//! crossing variable, slow decorrelation and localisation of maximisers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lpp::{lpp_point_to_point, maximizer_hits, Point, Weights};
use crate::rng::{replica_seed, SeedSpec, STREAM_BULK};
use crate::shock::{characteristic_points, drift, floor_tol, point_p, rescale, ShockConstants, Side};
use crate::stationary::{bulk_field, default_halfwidth, LineModel};
use crate::tw::DistTable;

/// Default exponent of the distance from `E` to `P`.
pub const DEFAULT_NU: f64 = 0.5;
/// Default exponent cutting the diagonal short of `P`.
pub const DEFAULT_BETA: f64 = 0.75;

/// Bulk seed of replica `r`.
pub fn replica(master: u64, r: usize) -> SeedSpec {
    SeedSpec::new(replica_seed(master, r as u64), STREAM_BULK)
}

fn half_line_model(sc: &ShockConstants, side: Side) -> LineModel {
    match side {
        Side::Lambda => LineModel::lambda_half_line(sc.lambda),
        Side::Rho => LineModel::rho_half_line(sc.rho),
    }
}

/// `L_{L_side -> target}` for many targets in one sweep.
pub fn half_line_values<W: Weights + ?Sized>(field: &W, sc: &ShockConstants, side: Side, targets: &[Point], n: f64) -> Result<Vec<f64>> {
    Ok(half_line_model(sc, side).solve_around(field, targets, n)?.into_iter().map(|o| o.value).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledSample {
    pub u: f64,
    pub v: f64,
    pub value_lambda: f64,
    pub value_rho: f64,
}

/// Both rescaled processes at the points `P(u N^{1/3}, v N^{1/3})`.
pub fn rescaled_samples<W: Weights + ?Sized>(field: &W, sc: &ShockConstants, n: f64, uv: &[(f64, f64)]) -> Result<Vec<RescaledSample>> {
    let pts = uv.iter().map(|&(u, v)| point_p(n, u, v, sc)).collect::<Result<Vec<_>>>()?;
    let lam = half_line_values(field, sc, Side::Lambda, &pts, n)?;
    let rho = half_line_values(field, sc, Side::Rho, &pts, n)?;
    Ok(uv
        .iter()
        .zip(lam.iter().zip(&rho))
        .map(|(&(u, v), (&a, &b))| RescaledSample {
            u,
            v,
            value_lambda: rescale(a, n, u, v, Side::Lambda, sc),
            value_rho: rescale(b, n, u, v, Side::Rho, sc),
        })
        .collect())
}

/// `(chi_lambda, chi_rho)` over replicas.
pub fn one_point_samples(sc: &ShockConstants, n: f64, replicas: usize, master: u64) -> Result<Vec<(f64, f64)>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let s = rescaled_samples(&bulk_field(replica(master, r)), sc, n, &[(0.0, 0.0)])?[0];
            Ok((s.value_lambda, s.value_rho))
        })
        .collect()
}

/// `F_GOE(2^{2/3} s / sigma)`.
pub fn goe_marginal_cdf(goe: &DistTable, sigma: f64, s: f64) -> f64 {
    goe.cdf(2f64.powf(2.0 / 3.0) * s / sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub samples: usize,
    pub correlation: f64,
    /// `sup |F_joint(x,y) - F_x(x) F_y(y)|` over sample thresholds.
    pub joint_product_distance: f64,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0; xs.len()];
    for (k, &i) in idx.iter().enumerate() {
        r[i] = k;
    }
    r
}

/// Correlation and joint-versus-product distance of paired samples.
pub fn independence_report(xs: &[f64], ys: &[f64]) -> Result<IndependenceReport> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("need at least two paired samples"));
    }
    let n = xs.len();
    let (rx, ry) = (ranks(xs), ranks(ys));
    let mut by_x = vec![0usize; n];
    for i in 0..n {
        by_x[rx[i]] = ry[i];
    }
    // marked[b]: the point of y rank b is among the a+1 smallest in x
    let mut marked = vec![false; n];
    let mut dist: f64 = 0.0;
    let nf = n as f64;
    for a in 0..n {
        marked[by_x[a]] = true;
        let fa = (a + 1) as f64 / nf;
        let mut c = 0usize;
        for (b, &m) in marked.iter().enumerate() {
            c += usize::from(m);
            let fb = (b + 1) as f64 / nf;
            dist = dist.max((c as f64 / nf - fa * fb).abs());
        }
    }
    Ok(IndependenceReport {
        samples: n,
        correlation: pearson(xs, ys),
        joint_product_distance: dist,
    })
}

pub fn independence_diagnostic(sc: &ShockConstants, n: f64, replicas: usize, master: u64) -> Result<IndependenceReport> {
    let s = one_point_samples(sc, n, replicas, master)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = s.into_iter().unzip();
    independence_report(&xs, &ys)
}

/// `U / N^{1/3}` for every integer `U` with `|U| <= C N^{1/3}`: all lattice
/// points of the parallelogram along one direction.
pub fn lattice_grid(n: f64, c: f64) -> Vec<f64> {
    let cn = n.cbrt();
    let m = (c * cn + 1e-9).floor() as i64;
    (-m..=m).map(|k| k as f64 / cn).collect()
}

/// `max |L^resc(u,v) - L^resc(0,0)|` over the grid for one replica.
pub fn modulus_sample<W: Weights + ?Sized>(field: &W, sc: &ShockConstants, n: f64, side: Side, u_grid: &[f64], v_grid: &[f64]) -> Result<f64> {
    let mut uv = vec![(0.0, 0.0)];
    for &v in v_grid {
        uv.extend(u_grid.iter().map(|&u| (u, v)));
    }
    let pts = uv.iter().map(|&(u, v)| point_p(n, u, v, sc)).collect::<Result<Vec<_>>>()?;
    let model = half_line_model(sc, side);
    // exits spread on the scale N^{2/3}; a miss only widens the window
    let raw = model.solve(field, &pts, model.centre_for(&pts)?, 2.0 * n.powf(2.0 / 3.0))?;
    let resc: Vec<f64> = uv
        .iter()
        .zip(&raw)
        .map(|(&(u, v), o)| rescale(o.value, n, u, v, side, sc))
        .collect();
    Ok(resc[1..].iter().map(|x| (x - resc[0]).abs()).fold(0.0, f64::max))
}

/// Sup-increment samples over replicas. The grids must lie in `[-C, C]`.
#[allow(clippy::too_many_arguments)]
pub fn modulus_diagnostic(sc: &ShockConstants, n: f64, side: Side, c: f64, u_grid: &[f64], v_grid: &[f64], replicas: usize, master: u64) -> Result<Vec<f64>> {
    if u_grid.iter().chain(v_grid).any(|x| x.abs() > c + 1e-12) {
        return Err(invalid(format!("grid points must lie in [-{c}, {c}]")));
    }
    (0..replicas)
        .into_par_iter()
        .map(|r| modulus_sample(&bulk_field(replica(master, r)), sc, n, side, u_grid, v_grid))
        .collect()
}

/// Crossing grid `-6, -5.9, ..., 6`.
pub fn crossing_grid() -> Vec<f64> {
    (-60..=60).map(|k| k as f64 / 10.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingSample {
    /// Where the drift-adjusted profiles meet; `None` if they do not cross on
    /// the grid.
    pub crossing: Option<f64>,
    pub chi_lambda: f64,
    pub chi_rho: f64,
    /// `(chi_lambda - chi_rho) / Upsilon`.
    pub predicted: f64,
}

/// First sign change of `(L_lambda - L_rho)(P(u N^{1/3})) / N^{1/3}` from
/// nonnegative to negative, linearly interpolated.
pub fn crossing_sample<W: Weights + ?Sized>(field: &W, sc: &ShockConstants, n: f64) -> Result<CrossingSample> {
    let grid = crossing_grid();
    let mut uv: Vec<(f64, f64)> = grid.iter().map(|&u| (u, 0.0)).collect();
    uv.push((0.0, 0.0));
    let s = rescaled_samples(field, sc, n, &uv)?;
    let gap: Vec<f64> = s[..grid.len()]
        .iter()
        .map(|x| (x.value_lambda - drift(sc.lambda) * x.u) - (x.value_rho - drift(sc.rho) * x.u))
        .collect();
    let crossing = first_crossing(&grid, &gap);
    let o = s[grid.len()];
    Ok(CrossingSample {
        crossing,
        chi_lambda: o.value_lambda,
        chi_rho: o.value_rho,
        predicted: (o.value_lambda - o.value_rho) / sc.upsilon,
    })
}

/// First grid interval where `gap` goes from nonnegative to negative, with
/// linear interpolation inside it.
pub fn first_crossing(grid: &[f64], gap: &[f64]) -> Option<f64> {
    (0..grid.len().min(gap.len()).saturating_sub(1))
        .find(|&k| gap[k] >= 0.0 && gap[k + 1] < 0.0)
        .map(|k| {
            let t = gap[k] / (gap[k] - gap[k + 1]);
            grid[k] + t * (grid[k + 1] - grid[k])
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub samples: Vec<CrossingSample>,
    /// Replicas without a crossing on the grid.
    pub flagged: usize,
    /// Median of `|U - (chi_lambda - chi_rho)/Upsilon|` over unflagged replicas.
    pub median_abs_error: f64,
}

pub fn crossing_diagnostic(sc: &ShockConstants, n: f64, replicas: usize, master: u64) -> Result<CrossingReport> {
    let samples: Vec<CrossingSample> = (0..replicas)
        .into_par_iter()
        .map(|r| crossing_sample(&bulk_field(replica(master, r)), sc, n))
        .collect::<Result<_>>()?;
    let mut errs: Vec<f64> = samples.iter().filter_map(|s| s.crossing.map(|u| (u - s.predicted).abs())).collect();
    errs.sort_by(f64::total_cmp);
    let flagged = samples.len() - errs.len();
    let median_abs_error = if errs.is_empty() { f64::NAN } else { median_sorted(&errs) };
    Ok(CrossingReport { samples, flagged, median_abs_error })
}

pub fn median_sorted(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowDecorrelationSample {
    /// `L_{L_side -> P}`.
    pub direct: f64,
    /// `L_{L_side -> E_side}`.
    pub to_e: f64,
    /// `L_{E_side -> P}`.
    pub e_to_p: f64,
}

impl SlowDecorrelationSample {
    pub fn via_e(&self) -> f64 {
        self.to_e + self.e_to_p
    }
}

pub fn slow_decorrelation_sample<W: Weights + ?Sized>(field: &W, sc: &ShockConstants, n: f64, nu: f64, side: Side) -> Result<SlowDecorrelationSample> {
    let (el, er) = characteristic_points(n, nu, sc)?;
    let e = match side {
        Side::Lambda => el,
        Side::Rho => er,
    };
    let p = point_p(n, 0.0, 0.0, sc)?;
    let v = half_line_values(field, sc, side, &[p, e], n)?;
    let e_to_p = lpp_point_to_point(field, e, p, false)?
        .value()
        .ok_or_else(|| Error::Invariant(format!("{p:?} is not above {e:?}")))?;
    Ok(SlowDecorrelationSample { direct: v[0], to_e: v[1], e_to_p })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowDecorrelationReport {
    /// `corr(L_{L -> P}, L_{L -> E} + L_{E -> P})`.
    pub correlation: f64,
    /// Centering of `L_{E -> P}` fitted as its mean divided by `N^nu`.
    pub mu_tilde: f64,
    /// Standard deviation of `(L_{L -> P} - L_{L -> E} - L_{E -> P}) / N^{1/3}`.
    pub residual_sd: f64,
    pub samples: Vec<SlowDecorrelationSample>,
}

pub fn slow_decorrelation_diagnostic(sc: &ShockConstants, n: f64, nu: f64, side: Side, replicas: usize, master: u64) -> Result<SlowDecorrelationReport> {
    if replicas < 2 {
        return Err(invalid("need at least two replicas"));
    }
    let samples: Vec<SlowDecorrelationSample> = (0..replicas)
        .into_par_iter()
        .map(|r| slow_decorrelation_sample(&bulk_field(replica(master, r)), sc, n, nu, side))
        .collect::<Result<_>>()?;
    let a: Vec<f64> = samples.iter().map(|s| s.direct).collect();
    let b: Vec<f64> = samples.iter().map(|s| s.via_e()).collect();
    let m = replicas as f64;
    let mu_tilde = samples.iter().map(|s| s.e_to_p).sum::<f64>() / m / n.powf(nu);
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y) / n.cbrt()).collect();
    let md = d.iter().sum::<f64>() / m;
    let residual_sd = (d.iter().map(|x| (x - md).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    Ok(SlowDecorrelationReport {
        correlation: pearson(&a, &b),
        mu_tilde,
        residual_sd,
        samples,
    })
}

/// `{D_eta : 0 <= eta <= 1 - N^{beta-1}}` with
/// `D_eta = (floor(eta (1+gamma) N), floor(eta (1-gamma) N))`.
pub fn diagonal_points(n: f64, sc: &ShockConstants, beta: f64) -> Result<Vec<Point>> {
    if !(beta > 2.0 / 3.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (2/3, 1), got {beta}")));
    }
    let (a, b) = ((1.0 + sc.gamma) * n, (1.0 - sc.gamma) * n);
    let eta_max = 1.0 - n.powf(beta - 1.0);
    // the floors change only at eta = k/a or k/b
    let mut etas: Vec<f64> = (0..=(eta_max * a) as i64).map(|k| k as f64 / a).collect();
    etas.extend((0..=(eta_max * b) as i64).map(|k| k as f64 / b));
    etas.retain(|&e| e <= eta_max);
    etas.sort_by(f64::total_cmp);
    let mut pts: Vec<Point> = etas.iter().map(|&e| Point::new(floor_tol(e * a), floor_tol(e * b))).collect();
    pts.dedup();
    Ok(pts)
}

/// Whether the maximiser from `L_side` to `E_side` meets the diagonal set.
pub fn maximizer_meets_diagonal<W: Weights + ?Sized>(field: &W, sc: &ShockConstants, n: f64, nu: f64, beta: f64, side: Side) -> Result<bool> {
    let (el, er) = characteristic_points(n, nu, sc)?;
    let e = match side {
        Side::Lambda => el,
        Side::Rho => er,
    };
    let model = half_line_model(sc, side);
    let (_, path) = model.solve_path(field, e, model.centre_for(&[e])?, default_halfwidth(n) / 3.0)?;
    Ok(maximizer_hits(&path, &diagonal_points(n, sc, beta)?))
}

/// Fraction of replicas whose maximiser meets the diagonal set.
pub fn localization_fraction(sc: &ShockConstants, n: f64, nu: f64, beta: f64, side: Side, replicas: usize, master: u64) -> Result<f64> {
    let hits: Vec<bool> = (0..replicas)
        .into_par_iter()
        .map(|r| maximizer_meets_diagonal(&bulk_field(replica(master, r)), sc, n, nu, beta, side))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / replicas.max(1) as f64)
}
