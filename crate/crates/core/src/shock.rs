//! Deterministic constants and lattice geometry of the shock, and the
//! rescaled last-passage processes built on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lpp::{Point, StartSet};

/// `floor(v)` with a relative guard so that ratios which are integers in exact
/// arithmetic do not drop by one through rounding.
pub fn floor_tol(v: f64) -> i64 {
    (v + 1e-9 * v.abs().max(1.0)).floor() as i64
}

pub fn round_lattice(v: f64) -> i64 {
    v.round() as i64
}

/// Which of the two half-lines (or densities) a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Lambda,
    Rho,
}

/// Law of the second-class position (`X`) or of its step count (`N`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    X,
    N,
}

/// Shock speed `1 - lambda - rho`.
pub fn speed(lambda: f64, rho: f64) -> f64 {
    1.0 - lambda - rho
}

/// `2 / (1 - lambda - rho + 2 lambda rho)`; positive for all densities in (0,1).
pub fn mu0(lambda: f64, rho: f64) -> f64 {
    2.0 / (1.0 - lambda - rho + 2.0 * lambda * rho)
}

/// Slope `(1-2d)/(d(1-d))` of the LPP centering along `(1,-1)` for density `d`.
pub fn drift(d: f64) -> f64 {
    (1.0 - 2.0 * d) / (d * (1.0 - d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockConstants {
    pub lambda: f64,
    pub rho: f64,
    pub v: f64,
    pub gamma: f64,
    pub mu0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub upsilon: f64,
    pub xi_lambda: f64,
    pub xi_rho: f64,
    /// `A_lambda / N`.
    pub a_lambda: (f64, f64),
    /// `A_rho / N`.
    pub a_rho: (f64, f64),
    pub char_dir_lambda: (f64, f64),
    pub char_dir_rho: (f64, f64),
}

pub fn shock_constants(lambda: f64, rho: f64) -> Result<ShockConstants> {
    if !(lambda > 0.0 && lambda < rho && rho < 1.0) {
        return Err(invalid(format!("need 0 < lambda < rho < 1, got ({lambda}, {rho})")));
    }
    let d = 1.0 - lambda - rho + 2.0 * lambda * rho;
    let cbrt2 = 2f64.cbrt();
    let xi_lambda = 2.0 * (rho - lambda) * lambda / d;
    let xi_rho = -2.0 * (rho - lambda) * rho / d;
    Ok(ShockConstants {
        lambda,
        rho,
        v: speed(lambda, rho),
        gamma: (1.0 - lambda - rho) / d,
        mu0: 2.0 / d,
        sigma1: cbrt2 / (lambda * (1.0 - lambda) * d).cbrt(),
        sigma2: cbrt2 / (rho * (1.0 - rho) * d).cbrt(),
        upsilon: drift(lambda) - drift(rho),
        xi_lambda,
        xi_rho,
        a_lambda: ((lambda - 1.0) / lambda * xi_lambda, xi_lambda),
        a_rho: ((rho - 1.0) / rho * xi_rho, xi_rho),
        char_dir_lambda: ((1.0 - lambda).powi(2), lambda.powi(2)),
        char_dir_rho: ((1.0 - rho).powi(2), rho.powi(2)),
    })
}

impl ShockConstants {
    pub fn density(&self, side: Side) -> f64 {
        match side {
            Side::Lambda => self.lambda,
            Side::Rho => self.rho,
        }
    }

    pub fn sigma(&self, side: Side) -> f64 {
        match side {
            Side::Lambda => self.sigma1,
            Side::Rho => self.sigma2,
        }
    }

    pub fn xi(&self, side: Side) -> f64 {
        match side {
            Side::Lambda => self.xi_lambda,
            Side::Rho => self.xi_rho,
        }
    }

    /// `(a, b)` with the limit law equal to `a xi1 + b xi2` for independent
    /// GOE Tracy-Widom variables.
    pub fn limit_coefficients(&self, which: Observable) -> (f64, f64) {
        let (l, r) = (self.lambda, self.rho);
        let pre = 2f64.cbrt() / (self.mu0.powf(4.0 / 3.0) * self.upsilon);
        let a = pre * self.sigma1 / (r * (1.0 - r));
        let b = -pre * self.sigma2 / (l * (1.0 - l));
        match which {
            Observable::X => (a, b),
            Observable::N => (a * (1.0 - 2.0 * r), b * (1.0 - 2.0 * l)),
        }
    }

    /// Scale `N = t / mu0` associated with time `t`.
    pub fn scale_of_time(&self, t: f64) -> f64 {
        t / self.mu0
    }
}

/// Point-to-point scaling for the target `(eta N, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtPointScaling {
    pub eta: f64,
    pub mu_pp: f64,
    pub sigma_eta: f64,
}

impl PtPointScaling {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        let s = eta.sqrt();
        Ok(PtPointScaling {
            eta,
            mu_pp: (1.0 + s).powi(2),
            sigma_eta: eta.powf(-1.0 / 6.0) * (1.0 + s).powf(4.0 / 3.0),
        })
    }

    pub fn rescale(&self, value: f64, n: f64) -> f64 {
        (value - self.mu_pp * n) / (self.sigma_eta * n.cbrt())
    }
}

/// Real coordinates of `P(u N^{1/3}, v N^{1/3})`.
pub fn point_p_real(n: f64, u: f64, v: f64, sc: &ShockConstants) -> (f64, f64) {
    let c = n.cbrt();
    let nt = n + v * c;
    ((1.0 + sc.gamma) * nt + u * c, (1.0 - sc.gamma) * nt - u * c)
}

/// `P(u N^{1/3}, v N^{1/3})` rounded coordinatewise to the lattice.
pub fn point_p(n: f64, u: f64, v: f64, sc: &ShockConstants) -> Result<Point> {
    let (x, y) = point_p_real(n, u, v, sc);
    let p = Point::new(round_lattice(x), round_lattice(y));
    if p.i <= 0 || p.j <= 0 {
        return Err(invalid(format!("P({u}, {v}) at N={n} has a nonpositive coordinate")));
    }
    Ok(p)
}

/// `(E_lambda, E_rho)`: points on the two characteristics at distance `N^nu`
/// below `P`.
pub fn characteristic_points(n: f64, nu: f64, sc: &ShockConstants) -> Result<(Point, Point)> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid(format!("nu must lie in (0,1), got {nu}")));
    }
    let (px, py) = point_p_real(n, 0.0, 0.0, sc);
    let h = n.powf(nu);
    let e = |d: (f64, f64)| Point::new(round_lattice(px - d.0 * h), round_lattice(py - d.1 * h));
    Ok((e(sc.char_dir_lambda), e(sc.char_dir_rho)))
}

/// Lattice start point `A_side` of the characteristic through `P`.
pub fn start_point(n: f64, side: Side, sc: &ShockConstants) -> Point {
    let a = match side {
        Side::Lambda => sc.a_lambda,
        Side::Rho => sc.a_rho,
    };
    Point::new(round_lattice(a.0 * n), round_lattice(a.1 * n))
}

/// Column of the half-line of density `d` in row `k`: `floor((d-1) k / d)`.
pub fn line_column(d: f64, k: i64) -> i64 {
    floor_tol((d - 1.0) * k as f64 / d)
}

/// Rows of the half-line on `side` that can reach `target`: `k >= 0` for the
/// lambda side and `k < 0` for the rho side.
pub fn half_line_rows(side: Side, d: f64, target: Point) -> Option<(i64, i64)> {
    match side {
        Side::Lambda => (target.j >= 0).then_some((0, target.j)),
        Side::Rho => {
            // columns grow as k decreases; keep rows whose column is <= target.i
            let mut k = -1i64;
            if line_column(d, k) > target.i {
                return None;
            }
            let mut step = 1i64;
            while line_column(d, k - step) <= target.i {
                k -= step;
                step *= 2;
            }
            while step > 1 {
                step /= 2;
                if line_column(d, k - step) <= target.i {
                    k -= step;
                }
            }
            Some((k, (-1).min(target.j)))
        }
    }
}

/// The half-line of the given side as a start set for `target`, optionally
/// restricted to rows `[k_lo, k_hi]`.
pub fn half_line(side: Side, sc: &ShockConstants, target: Point, rows: Option<(i64, i64)>) -> Result<StartSet> {
    let d = sc.density(side);
    let (mut lo, mut hi) = half_line_rows(side, d, target)
        .ok_or_else(|| invalid(format!("no row of the {side:?} line reaches {target:?}")))?;
    if let Some((a, b)) = rows {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    StartSet::line(lo, hi, |k| line_column(d, k))
}

/// Affine centering and scaling of a raw passage time to `P(u,v)`.
pub fn rescale(value_raw: f64, n: f64, u: f64, v: f64, side: Side, sc: &ShockConstants) -> f64 {
    let c = n.cbrt();
    let centre = sc.mu0 * (n + v * c) - drift(sc.density(side)) * u * c;
    (value_raw - centre) / c
}

pub fn unrescale(value: f64, n: f64, u: f64, v: f64, side: Side, sc: &ShockConstants) -> f64 {
    let c = n.cbrt();
    let centre = sc.mu0 * (n + v * c) - drift(sc.density(side)) * u * c;
    value * c + centre
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let sc = shock_constants(0.25, 0.75).unwrap();
        assert_eq!(sc.v, 0.0);
        assert_eq!(sc.gamma, 0.0);
        assert!((sc.mu0 - 16.0 / 3.0).abs() < 1e-12);
        assert!((sc.upsilon - 16.0 / 3.0).abs() < 1e-12);
        assert!((sc.sigma1 - 3.0525).abs() < 1e-4);
        assert!((sc.sigma1 - sc.sigma2).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_pair() {
        let sc = shock_constants(0.2, 0.6).unwrap();
        assert!((sc.v - 0.2).abs() < 1e-12);
        assert!((sc.gamma - 0.4545).abs() < 1e-4);
        assert!((sc.mu0 - 4.5455).abs() < 1e-4);
        assert!((sc.upsilon - 4.5833).abs() < 1e-4);
        // values from an independent double-precision evaluation
        assert!((sc.sigma1 - 3.051306111175712).abs() < 1e-12);
        assert!((sc.sigma2 - 2.6655614106535874).abs() < 1e-12);
    }

    #[test]
    fn ordering_enforced() {
        assert!(shock_constants(0.6, 0.2).is_err());
        assert!(shock_constants(0.0, 0.5).is_err());
        assert!(shock_constants(0.3, 1.0).is_err());
    }

    #[test]
    fn lattice_points() {
        let sc = shock_constants(0.25, 0.75).unwrap();
        assert_eq!(point_p(1000.0, 0.0, 0.0, &sc).unwrap(), Point::new(1000, 1000));
        assert_eq!(point_p_real(1000.0, 2.0, 0.0, &sc), (1020.0, 980.0));
        assert!(point_p(10.0, 100.0, 0.0, &sc).is_err());
    }

    #[test]
    fn rho_rows_bracket_the_target() {
        let sc = shock_constants(0.25, 0.75).unwrap();
        let t = Point::new(1000, 1000);
        let (lo, hi) = half_line_rows(Side::Rho, sc.rho, t).unwrap();
        assert_eq!(hi, -1);
        assert!(line_column(sc.rho, lo) <= t.i);
        assert!(line_column(sc.rho, lo - 1) > t.i);
    }
}
