//! Tracy-Widom GUE and GOE distribution functions as Fredholm determinants,
//! and the laws of linear combinations of two independent GOE variables.
//!
//! Determinants use Nystrom discretisation with Gauss-Legendre nodes on
//! `(0,1)` mapped to `(a, inf)` by `x = a + 4 tan(pi u / 2)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::shock::{Observable, ShockConstants};

/// `Ai(0)`.
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// `-Ai'(0)`.
pub const AIP0_NEG: f64 = 0.258_819_403_792_806_8;

const SERIES_MAX: f64 = 6.0;
const BLEND_WIDTH: f64 = 1.0;
const MAP_SCALE: f64 = 4.0;
pub const DEFAULT_ORDER: usize = 64;
const MIN_ORDER: usize = 8;

fn airy_series(x: f64) -> (f64, f64) {
    // Ai(x) = sum a_n x^n with a_{n+3} = a_n / ((n+2)(n+3))
    let x3 = x * x * x;
    let mut f = 1.0; // x^{3k} / ((2*3)(5*6)...)
    let mut g = x; // x^{3k+1} / ((3*4)(6*7)...)
    let mut ai = AI0 * f - AIP0_NEG * g;
    // derivative terms: 3k x^{3k-1}/... and (3k+1) x^{3k}/...
    let mut df = 0.0;
    let mut dg = 1.0;
    let mut aip = AI0 * df - AIP0_NEG * dg;
    let mut k = 1.0;
    loop {
        let a = 3.0 * k;
        df = f * x * x / (a - 1.0);
        f *= x3 / ((a - 1.0) * a);
        dg = g * x * x / a;
        g *= x3 / (a * (a + 1.0));
        let t0 = AI0 * f - AIP0_NEG * g;
        let t1 = AI0 * df - AIP0_NEG * dg;
        ai += t0;
        aip += t1;
        if k > 3.0 && f.abs() + g.abs() + df.abs() + dg.abs() <= 1e-18 * (ai.abs() + aip.abs() + 1e-300) {
            break;
        }
        if k > 400.0 {
            break;
        }
        k += 1.0;
    }
    (ai, aip)
}

/// Coefficients `u_k` and `v_k` of the large-argument expansions.
fn asymptotic_coeffs(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..n {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
    }
    (u, v)
}

/// Sums `sum_k sign_k c_k / z^k` over the selected indices, stopping at the
/// smallest term.
fn truncated(c: &[f64], z: f64, idx: impl Iterator<Item = usize>, alternate: bool) -> f64 {
    let mut s = 0.0;
    let mut prev = f64::INFINITY;
    for (m, k) in idx.enumerate() {
        let term = c[k] / z.powi(k as i32);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        let sign = if alternate && m % 2 == 1 { -1.0 } else { 1.0 };
        s += sign * term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    s
}

fn airy_asymptotic(x: f64) -> (f64, f64) {
    let (u, v) = asymptotic_coeffs(60);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    if x > 0.0 {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let e = (-zeta).exp();
        let su = truncated(&u, zeta, 0..u.len(), true);
        let sv = truncated(&v, zeta, 0..v.len(), true);
        (e / (2.0 * sqrt_pi * x.powf(0.25)) * su, -x.powf(0.25) * e / (2.0 * sqrt_pi) * sv)
    } else {
        let z = -x;
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        let ph = zeta - std::f64::consts::FRAC_PI_4;
        let (s, c) = ph.sin_cos();
        let ue = truncated(&u, zeta, (0..u.len()).step_by(2), true);
        let uo = truncated(&u, zeta, (1..u.len()).step_by(2), true);
        let ve = truncated(&v, zeta, (0..v.len()).step_by(2), true);
        let vo = truncated(&v, zeta, (1..v.len()).step_by(2), true);
        (
            (c * ue + s * uo) / (sqrt_pi * z.powf(0.25)),
            z.powf(0.25) / sqrt_pi * (s * ve - c * vo),
        )
    }
}

/// `(Ai(x), Ai'(x))` without the public range check; far in the right tail
/// both underflow to zero.
fn airy_pair_unchecked(x: f64) -> (f64, f64) {
    let ax = x.abs();
    if x > 100.0 {
        (0.0, 0.0)
    } else if ax <= SERIES_MAX {
        airy_series(x)
    } else if ax >= SERIES_MAX + BLEND_WIDTH {
        airy_asymptotic(x)
    } else {
        let t = (ax - SERIES_MAX) / BLEND_WIDTH;
        let w = t * t * (3.0 - 2.0 * t);
        let (a0, d0) = airy_series(x);
        let (a1, d1) = airy_asymptotic(x);
        ((1.0 - w) * a0 + w * a1, (1.0 - w) * d0 + w * d1)
    }
}

/// `(Ai(x), Ai'(x))` for `|x| <= 40`: Maclaurin series up to `|x| = 6`,
/// large-argument expansions beyond, blended over `6 <= |x| <= 7`.
pub fn airy_pair(x: f64) -> Result<(f64, f64)> {
    if !(x.abs() <= 40.0) {
        return Err(Error::Range(x));
    }
    Ok(airy_pair_unchecked(x))
}

pub fn airy_ai(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Nodes and weights for `(a, inf)`.
fn mapped_nodes(a: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(order);
    let h = std::f64::consts::FRAC_PI_2;
    t.iter()
        .zip(&w)
        .map(|(&t, &w)| {
            let u = (t + 1.0) / 2.0;
            let c = (h * u).cos();
            (a + MAP_SCALE * (h * u).tan(), w / 2.0 * MAP_SCALE * h / (c * c))
        })
        .unzip()
}

fn check_order(order: usize) -> Result<()> {
    if order < MIN_ORDER {
        return Err(Error::Accuracy(order));
    }
    Ok(())
}

fn fredholm(x: &[f64], w: &[f64], kernel: impl Fn(usize, usize) -> f64) -> f64 {
    let n = x.len();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - sw[i] * kernel(i, j) * sw[j]);
    m.determinant()
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// `F_GUE(s) = det(I - K_Airy)` on `L^2(s, inf)`.
pub fn f_gue_cdf(s: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !s.is_finite() {
        return Err(invalid("s must be finite"));
    }
    let (x, w) = mapped_nodes(s, order);
    let a: Vec<(f64, f64)> = x.iter().map(|&v| airy_pair_unchecked(v)).collect();
    Ok(clamp01(fredholm(&x, &w, |i, j| {
        let (ai, di) = a[i];
        let (aj, dj) = a[j];
        if i == j {
            di * di - x[i] * ai * ai
        } else {
            (ai * dj - di * aj) / (x[i] - x[j])
        }
    })))
}

/// `det(I - B)` on `L^2(a, inf)` with `B(x,y) = Ai(x+y)`; equals
/// `F_GOE(2a)`.
pub fn goe_window_det(a: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !a.is_finite() {
        return Err(invalid("window start must be finite"));
    }
    let (x, w) = mapped_nodes(a, order);
    let n = x.len();
    let mut ai = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = airy_pair_unchecked(x[i] + x[j]).0;
            ai[i * n + j] = v;
            ai[j * n + i] = v;
        }
    }
    Ok(fredholm(&x, &w, |i, j| ai[i * n + j]))
}

/// `F_GOE(s) = det(I - Ai(x+y))` on `L^2(s/2, inf)`.
pub fn f_goe_cdf(s: f64, order: usize) -> Result<f64> {
    goe_window_det(s / 2.0, order).map(clamp01)
}

/// Second form of the GOE determinant: `det(I - K)` on `L^2(0, inf)` with
/// `K(x,y) = Ai((x+y)/2 + s) / 2`.
pub fn f_goe_cdf_scaled_kernel(s: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    let (x, w) = mapped_nodes(0.0, order);
    Ok(clamp01(fredholm(&x, &w, |i, j| {
        0.5 * airy_pair_unchecked((x[i] + x[j]) / 2.0 + s).0
    })))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelId {
    Gue,
    Goe,
    /// Law of `a xi_1 + b xi_2` for independent GOE variables.
    GoeCombination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub order: usize,
    pub kernel: KernelId,
    /// Coefficients `(a, b)` for combination tables.
    pub coefficients: Option<(f64, f64)>,
}

/// Tabulated CDF on an increasing grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistTable {
    s_grid: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
    meta: TableMeta,
}

/// `n` points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Default grid step for tables.
pub const GRID_STEP: f64 = 0.02;

impl DistTable {
    pub fn new(s_grid: Vec<f64>, cdf: Vec<f64>, meta: TableMeta) -> Result<Self> {
        if s_grid.len() < 3 || s_grid.len() != cdf.len() {
            return Err(invalid("a table needs at least three matching grid and cdf values"));
        }
        if s_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid must be strictly increasing"));
        }
        if cdf.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("cdf values must lie in [0, 1]"));
        }
        if cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invariant("cdf is not nondecreasing".into()));
        }
        let slopes = pchip_slopes(&s_grid, &cdf);
        Ok(DistTable { s_grid, cdf, slopes, meta })
    }

    pub fn gue(s_grid: &[f64], order: usize) -> Result<Self> {
        let cdf = monotone(s_grid.iter().map(|&s| f_gue_cdf(s, order)).collect::<Result<_>>()?);
        Self::new(s_grid.to_vec(), cdf, TableMeta { order, kernel: KernelId::Gue, coefficients: None })
    }

    pub fn goe(s_grid: &[f64], order: usize) -> Result<Self> {
        let cdf = monotone(s_grid.iter().map(|&s| f_goe_cdf(s, order)).collect::<Result<_>>()?);
        Self::new(s_grid.to_vec(), cdf, TableMeta { order, kernel: KernelId::Goe, coefficients: None })
    }

    /// GUE table on `[-10, 6]` with the default step.
    pub fn default_gue(order: usize) -> Result<Self> {
        Self::gue(&uniform_grid(-10.0, 6.0, GRID_STEP), order)
    }

    /// GOE table on `[-10, 8]`; the GOE right tail is still `2e-6` at `s = 6`.
    pub fn default_goe(order: usize) -> Result<Self> {
        Self::goe(&uniform_grid(-10.0, 8.0, GRID_STEP), order)
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    /// Monotone cubic interpolation; `0` left of the grid, `1` right of it.
    pub fn cdf(&self, s: f64) -> f64 {
        let g = &self.s_grid;
        if s <= g[0] {
            return if s == g[0] { self.cdf[0] } else { 0.0 };
        }
        if s >= g[g.len() - 1] {
            return if s == g[g.len() - 1] { self.cdf[g.len() - 1] } else { 1.0 };
        }
        let k = g.partition_point(|&v| v <= s) - 1;
        let h = g[k + 1] - g[k];
        let t = (s - g[k]) / h;
        let (y0, y1, m0, m1) = (self.cdf[k], self.cdf[k + 1], self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1;
        v.clamp(y0, y1)
    }

    /// Centred finite differences (one-sided at the ends).
    pub fn density(&self) -> Vec<f64> {
        let (g, f) = (&self.s_grid, &self.cdf);
        let n = g.len();
        (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (f[b] - f[a]) / (g[b] - g[a])
            })
            .collect()
    }

    /// Trapezoid integral of the density over the grid.
    pub fn density_mass(&self) -> f64 {
        trapezoid(&self.s_grid, &self.density())
    }

    /// `int s dF` as a Stieltjes sum with midpoints.
    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    fn moment(&self, p: i32) -> f64 {
        let (g, f) = (&self.s_grid, &self.cdf);
        let mut acc = g[0].powi(p) * f[0];
        for k in 0..g.len() - 1 {
            acc += ((g[k] + g[k + 1]) / 2.0).powi(p) * (f[k + 1] - f[k]);
        }
        acc + g[g.len() - 1].powi(p) * (1.0 - f[g.len() - 1])
    }

    /// Smallest `s` on the interpolant with `F(s) >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let g = &self.s_grid;
        let n = g.len();
        if u <= self.cdf[0] {
            return g[0];
        }
        if u >= self.cdf[n - 1] {
            return g[n - 1];
        }
        let k = self.cdf.partition_point(|&v| v < u);
        let (mut lo, mut hi) = (g[k - 1], g[k]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Inverse-transform samples from uniforms.
    pub fn sample(&self, uniforms: impl IntoIterator<Item = f64>) -> Vec<f64> {
        uniforms.into_iter().map(|u| self.quantile(u)).collect()
    }

    /// CSV with columns `s,cdf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,cdf\n");
        for (s, c) in self.s_grid.iter().zip(&self.cdf) {
            out.push_str(&format!("{s:.6},{c:.15e}\n"));
        }
        out
    }
}

/// Removes round-off decreases of order `1e-15` between neighbours.
fn monotone(mut v: Vec<f64>) -> Vec<f64> {
    for k in 1..v.len() {
        if v[k] < v[k - 1] {
            v[k] = v[k - 1];
        }
    }
    v
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Fritsch-Carlson slopes for a monotone Hermite interpolant.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    m[0] = end_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// CDF of `a xi_1 + b xi_2` for independent `xi_i` with law `base`, on
/// `s_grid`, via `int P(a xi_1 <= s - b y) f(y) dy` with the tabulated
/// density `f` of `base`.
pub fn combination_cdf(a: f64, b: f64, base: &DistTable, s_grid: &[f64]) -> Result<DistTable> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(invalid("the first coefficient must be finite and nonzero"));
    }
    let ys = base.s_grid();
    let f = base.density();
    let cdf: Vec<f64> = s_grid
        .iter()
        .map(|&s| {
            let vals: Vec<f64> = ys
                .iter()
                .zip(&f)
                .map(|(&y, &fy)| {
                    let z = (s - b * y) / a;
                    let p = if a > 0.0 { base.cdf(z) } else { 1.0 - base.cdf(z) };
                    p * fy
                })
                .collect();
            trapezoid(ys, &vals).clamp(0.0, 1.0)
        })
        .collect();
    DistTable::new(
        s_grid.to_vec(),
        monotone(cdf),
        TableMeta {
            order: base.meta().order,
            kernel: KernelId::GoeCombination,
            coefficients: Some((a, b)),
        },
    )
}

/// Grid covering the combination's support when both variables live on the
/// grid of `base`.
pub fn combination_grid(a: f64, b: f64, base: &DistTable, step: f64) -> Vec<f64> {
    let g = base.s_grid();
    let (lo, hi) = (g[0], g[g.len() - 1]);
    let ends = [a * lo + b * lo, a * lo + b * hi, a * hi + b * lo, a * hi + b * hi];
    let min = ends.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ends.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    uniform_grid((min / step).floor() * step, (max / step).ceil() * step, step)
}

/// Limit law of the rescaled `X_t` or `N_t`: `a xi_1 + b xi_2` with
/// independent GOE variables.
pub fn limit_law_cdf(which: Observable, sc: &ShockConstants, goe: &DistTable, s_grid: Option<&[f64]>) -> Result<DistTable> {
    let (a, b) = sc.limit_coefficients(which);
    if a == 0.0 || b == 0.0 {
        return Err(invalid("degenerate combination"));
    }
    let grid = match s_grid {
        Some(g) => g.to_vec(),
        None => combination_grid(a, b, goe, GRID_STEP),
    };
    combination_cdf(a, b, goe, &grid)
}
