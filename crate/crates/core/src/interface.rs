//! Competition interface between the two clusters of the shock initial data.
//!
//! The second-class particle is replaced by a hole at site 0 followed by an
//! extra particle (label 0) at site 1; first-class particles to the right move
//! one site further. In LPP coordinates the initial line is
//! `{(k + x_k(0), k)}` with
//!
//! * `x_k(0) = -floor(k / lambda)` for `k > 0` (the upper-left half `L+`),
//! * `x_0(0) = 1` and `x_k(0) = 1 - floor(k / rho)` for `k < 0` (`L-`).
//!
//! A point belongs to `Gamma+` when its passage time from `L+` beats the one
//! from `L-`. The interface `phi_n = (I_n, J_n)` starts at `(0,0)`, always
//! steps to `(1,0)` first, and the second-class particle sits at
//! `I - J - 1` during `[tau_n, tau_{n+1})` with `tau_n = L(phi_n)`.
//! `J` counts left swaps and `I - 1` right jumps, so `n - 1` is the number of
//! steps taken.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lpp::{lpp_line_to_point, LppOutcome, Point, Rect, StartSet};
use crate::rng::{SeedSpec, WeightField};
use crate::shock::{floor_tol, mu0};
use crate::tasep::{initial_site, FieldTasep, ShockSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cluster {
    Plus,
    Minus,
}

/// Column of row `k` of the extended initial line.
pub fn line_column(k: i64, lambda: f64, rho: f64) -> i64 {
    if k > 0 {
        k - floor_tol(k as f64 / lambda)
    } else if k == 0 {
        1
    } else {
        k - floor_tol(k as f64 / rho) + 1
    }
}

fn check_densities(lambda: f64, rho: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 0.5 && rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!(
            "the interface construction needs 0 < lambda <= 1/2 and 0 < rho < 1, got ({lambda}, {rho})"
        )));
    }
    Ok(())
}

/// Rows `k <= 0` whose start column is at most `i_max`.
fn minus_rows(i_max: i64, lambda: f64, rho: f64) -> i64 {
    let mut k = 0i64;
    let mut step = 1i64;
    while line_column(k - step, lambda, rho) <= i_max {
        k -= step;
        step *= 2;
    }
    while step > 1 {
        step /= 2;
        if line_column(k - step, lambda, rho) <= i_max {
            k -= step;
        }
    }
    k
}

/// The finite parts of `L+` and `L-` that can reach `p`.
pub fn cluster_start_sets(p: Point, lambda: f64, rho: f64) -> Result<(Option<StartSet>, StartSet)> {
    check_densities(lambda, rho)?;
    let col = |k| line_column(k, lambda, rho);
    let plus = if p.j >= 1 { Some(StartSet::line(1, p.j, col)?) } else { None };
    let lo = minus_rows(p.i.max(1), lambda, rho);
    let minus = StartSet::line(lo, 0.min(p.j), col)?;
    Ok((plus, minus))
}

/// Cluster of `p` (with `p.i >= 1`, `p.j >= 0`) from two independent solves.
pub fn cluster_of(field: &WeightField, lambda: f64, rho: f64, p: Point) -> Result<Cluster> {
    if p.i < 1 || p.j < 0 {
        return Err(invalid(format!("{p:?} is outside the quadrant i >= 1, j >= 0")));
    }
    let (plus, minus) = cluster_start_sets(p, lambda, rho)?;
    let lp = match plus {
        Some(s) => lpp_line_to_point(field, &s, p, false)?,
        None => LppOutcome::NoPath,
    };
    let lm = lpp_line_to_point(field, &minus, p, false)?;
    match (lp.value(), lm.value()) {
        (Some(a), Some(b)) if a == b => Err(Error::DegenerateTie { i: p.i, j: p.j }),
        (Some(a), Some(b)) => Ok(if a > b { Cluster::Plus } else { Cluster::Minus }),
        (Some(_), None) => Ok(Cluster::Plus),
        (None, Some(_)) => Ok(Cluster::Minus),
        (None, None) => Err(Error::Invariant(format!("{p:?} is unreachable from both halves"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfacePath {
    /// `phi_0 = (0,0), phi_1 = (1,0), ...`
    pub steps: Vec<Point>,
    /// `tau_n = L(phi_n)`; `phi_0` is not reachable and carries `-inf`.
    pub times: Vec<f64>,
}

impl InterfacePath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Index `n` with `tau_n <= t < tau_{n+1}`.
    fn index_at(&self, t: f64) -> Result<usize> {
        let last = *self.times.last().expect("nonempty path");
        if !(t < last) {
            return Err(Error::InsufficientHorizon {
                requested: t,
                available: last,
            });
        }
        Ok(self.times.partition_point(|&s| s <= t) - 1)
    }

    /// `(I, J)` at time `t`.
    pub fn position_at(&self, t: f64) -> Result<Point> {
        Ok(self.steps[self.index_at(t)?])
    }
}

/// `I(t) - J(t) - 1`.
pub fn second_class_from_interface(ip: &InterfacePath, t: f64) -> Result<i64> {
    let p = ip.position_at(t)?;
    Ok(p.i - p.j - 1)
}

/// Steps of the second-class particle up to `t`: `n(t) - 1`.
pub fn steps_from_interface(ip: &InterfacePath, t: f64) -> Result<i64> {
    Ok(ip.index_at(t)? as i64 - 1)
}

/// One DP row restricted to its reachable suffix `[lo, i_max]`.
#[derive(Clone, Debug, Default)]
struct Row {
    lo: i64,
    v: Vec<f64>,
}

impl Row {
    #[inline]
    fn get(&self, i: i64) -> Option<f64> {
        (i >= self.lo && i - self.lo < self.v.len() as i64).then(|| self.v[(i - self.lo) as usize])
    }
}

/// Joint row sweep of the passage times from `L+` and `L-`, sharing one weight
/// per cell.
struct TwoTables<'a> {
    field: &'a WeightField,
    lambda: f64,
    rho: f64,
    i_max: i64,
    j: i64,
    prev_m: Row,
    cur_m: Row,
    prev_p: Option<Row>,
    cur_p: Option<Row>,
}

impl<'a> TwoTables<'a> {
    fn new(field: &'a WeightField, lambda: f64, rho: f64, i_max: i64) -> Self {
        let j0 = minus_rows(i_max, lambda, rho);
        TwoTables {
            field,
            lambda,
            rho,
            i_max,
            j: j0 - 1,
            prev_m: Row::default(),
            cur_m: Row { lo: i_max + 1, v: Vec::new() },
            prev_p: None,
            cur_p: None,
        }
    }

    fn col(&self, k: i64) -> i64 {
        line_column(k, self.lambda, self.rho)
    }

    fn window_needed(&self, j: i64) -> Rect {
        Rect::new(self.col(j.max(1)).min(1), self.i_max, minus_rows(self.i_max, self.lambda, self.rho), j)
    }

    /// Computes row `j + 1`.
    fn advance(&mut self) -> Result<()> {
        let j = self.j + 1;
        let wr = self.window_needed(j);
        if !self.field.covers(&wr) {
            return Err(Error::WindowOverflow(format!("row {j} leaves the weight window")));
        }
        std::mem::swap(&mut self.prev_m, &mut self.cur_m);
        std::mem::swap(&mut self.prev_p, &mut self.cur_p);
        let i_max = self.i_max;

        let m_lo = if j <= 0 { self.col(j) } else { 1 };
        let p_lo = (j >= 1).then(|| self.col(j));
        let lo = p_lo.map_or(m_lo, |p| p.min(m_lo));

        let mut m = std::mem::take(&mut self.cur_m.v);
        m.clear();
        let mut pv = self.cur_p.take().map(|r| r.v).unwrap_or_default();
        pv.clear();

        let mut left_m: Option<f64> = None;
        let mut left_p: Option<f64> = None;
        for i in lo..=i_max {
            let need_m = i >= m_lo;
            let need_p = p_lo.is_some_and(|p| i >= p);
            let below_m = if need_m { self.prev_m.get(i) } else { None };
            let below_p = if need_p { self.prev_p.as_ref().and_then(|r| r.get(i)) } else { None };
            let start_m = j <= 0 && i == m_lo;
            let start_p = p_lo == Some(i);
            let w = if (need_m && !start_m) || (need_p && !start_p) {
                self.field.weight_unchecked(i, j)
            } else {
                0.0
            };
            if need_m {
                let v = cell(start_m, left_m, below_m, w);
                m.push(v);
                left_m = Some(v);
            }
            if need_p {
                let v = cell(start_p, left_p, below_p, w);
                pv.push(v);
                left_p = Some(v);
            }
        }
        self.cur_m = Row { lo: m_lo, v: m };
        self.cur_p = p_lo.map(|lo| Row { lo, v: pv });
        self.j = j;
        Ok(())
    }

    /// `(L+, L-)` at column `i` of the current or previous row.
    fn values(&self, i: i64, current: bool) -> (Option<f64>, Option<f64>) {
        let (m, p) = if current {
            (&self.cur_m, &self.cur_p)
        } else {
            (&self.prev_m, &self.prev_p)
        };
        (p.as_ref().and_then(|r| r.get(i)), m.get(i))
    }
}

#[inline]
fn cell(start: bool, left: Option<f64>, below: Option<f64>, w: f64) -> f64 {
    let best = match (left, below) {
        (Some(a), Some(b)) => Some(if a >= b { a } else { b }),
        (a, b) => a.or(b),
    };
    if start {
        // start cells carry boundary value 0 and no weight
        best.map_or(0.0, |b| b.max(0.0))
    } else {
        w + best.expect("interior cells of the reachable suffix have a predecessor")
    }
}

fn decide(i: i64, j: i64, vals: (Option<f64>, Option<f64>)) -> Result<(Cluster, f64)> {
    match vals {
        (Some(a), Some(b)) if a == b => Err(Error::DegenerateTie { i, j }),
        (Some(a), Some(b)) => Ok(if a > b { (Cluster::Plus, a) } else { (Cluster::Minus, b) }),
        (Some(a), None) => Ok((Cluster::Plus, a)),
        (None, Some(b)) => Ok((Cluster::Minus, b)),
        (None, None) => Err(Error::Invariant(format!("({i}, {j}) is unreachable"))),
    }
}

#[derive(Clone, Copy)]
enum Stop {
    Steps(usize),
    Horizon(f64),
}

fn run_interface(field: &WeightField, lambda: f64, rho: f64, i_max: i64, stop: Stop) -> Result<InterfacePath> {
    check_densities(lambda, rho)?;
    let mut tables = TwoTables::new(field, lambda, rho, i_max);
    while tables.j < 1 {
        tables.advance()?;
    }
    // rows 0 and 1 are ready; phi_1 = (1,0) is the start cell of particle 0
    let mut steps = vec![Point::new(0, 0), Point::new(1, 0)];
    let mut times = vec![f64::NEG_INFINITY, 0.0];
    let (mut i, mut j) = (1i64, 0i64);
    loop {
        let done = match stop {
            Stop::Steps(n) => steps.len() > n,
            Stop::Horizon(t) => *times.last().expect("nonempty") > t,
        };
        if done {
            break;
        }
        if i + 1 > i_max {
            return Err(Error::WindowOverflow(format!("interface reached column {}", i + 1)));
        }
        let (side, _) = decide(i + 1, j + 1, tables.values(i + 1, true))?;
        match side {
            Cluster::Plus => {
                i += 1;
                let (_, tau) = decide(i, j, tables.values(i, false))?;
                times.push(tau);
            }
            Cluster::Minus => {
                j += 1;
                let (_, tau) = decide(i, j, tables.values(i, true))?;
                times.push(tau);
                tables.advance()?;
            }
        }
        steps.push(Point::new(i, j));
    }
    Ok(InterfacePath { steps, times })
}

/// Weight window that holds every cell the sweep may touch for columns up to
/// `i_max` and rows up to `j_max`.
pub fn interface_window(lambda: f64, rho: f64, i_max: i64, j_max: i64) -> Rect {
    Rect::new(
        line_column(j_max.max(1), lambda, rho).min(1),
        i_max,
        minus_rows(i_max, lambda, rho),
        j_max,
    )
}

/// First `n_steps` steps of the interface; the window of `field` bounds the
/// explored region.
pub fn competition_interface(field: &WeightField, lambda: f64, rho: f64, n_steps: usize) -> Result<InterfacePath> {
    if n_steps < 1 {
        return Err(invalid("n_steps must be at least 1"));
    }
    let i_max = field.window().i_max.min(n_steps as i64 + 1);
    run_interface(field, lambda, rho, i_max, Stop::Steps(n_steps))
}

/// Interface up to the first step after `horizon`.
pub fn interface_until(field: &WeightField, lambda: f64, rho: f64, horizon: f64) -> Result<InterfacePath> {
    run_interface(field, lambda, rho, field.window().i_max, Stop::Horizon(horizon))
}

/// Result of a horizon-driven interface run with automatic enlargement.
#[derive(Clone, Debug)]
pub struct InterfaceRun {
    pub path: InterfacePath,
    pub sample: ShockSample,
    /// Number of window enlargements that were needed.
    pub enlargements: u32,
}

/// Second-class position and step count at time `t` via the interface, for
/// the bulk weights of `seed`. The explored region starts at the
/// law-of-large-numbers location plus `10 + 8 N^{1/3}` and doubles its margin
/// on overflow; the weights are counter-based, so enlarging never changes
/// the sample.
pub fn shock_sample_via_interface(lambda: f64, rho: f64, t: f64, seed: SeedSpec) -> Result<InterfaceRun> {
    check_densities(lambda, rho)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("time must be finite and nonnegative"));
    }
    let d = 1.0 - lambda - rho + 2.0 * lambda * rho;
    let gamma = (1.0 - lambda - rho) / d;
    let n = t / mu0(lambda, rho);
    let mut margin = 10.0 + 8.0 * n.cbrt();
    let mut enlargements = 0;
    loop {
        let i_max = ((1.0 + gamma) * n + margin).ceil() as i64;
        let j_max = ((1.0 - gamma) * n + margin).ceil() as i64 + 1;
        let field = WeightField::exp1(seed, interface_window(lambda, rho, i_max, j_max))?;
        match interface_until(&field, lambda, rho, t) {
            Ok(path) => {
                let x = second_class_from_interface(&path, t)?;
                let steps = steps_from_interface(&path, t)?;
                return Ok(InterfaceRun {
                    sample: ShockSample::new(x, steps, t, lambda, rho),
                    path,
                    enlargements,
                });
            }
            Err(Error::WindowOverflow(_)) => {
                margin *= 2.0;
                enlargements += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Field-driven TASEP of the shock initial data with the second-class
/// particle at 0, truncated to particles starting in `[-halfwidth, halfwidth]`.
/// Cells that could feel the missing particles on the right raise a window
/// overflow.
pub fn field_shock_tasep(field: &WeightField, lambda: f64, rho: f64, halfwidth: i64) -> Result<FieldTasep<'_>> {
    check_densities(lambda, rho)?;
    let mut init = vec![(0i64, 0i64)];
    let mut k = 1i64;
    while initial_site(k, lambda, rho) >= -halfwidth {
        init.push((k, initial_site(k, lambda, rho)));
        k += 1;
    }
    let mut k = -1i64;
    while initial_site(k, lambda, rho) <= halfwidth {
        init.push((k, initial_site(k, lambda, rho)));
        k -= 1;
    }
    let mut tasep = FieldTasep::new(field, &init, Some(0))?;
    tasep.set_cell_limit(line_column(k, lambda, rho));
    Ok(tasep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_columns() {
        assert_eq!(line_column(0, 0.25, 0.75), 1);
        assert_eq!(line_column(1, 0.25, 0.75), -3);
        assert_eq!(line_column(2, 0.25, 0.75), -6);
        // x_{-1} = 1 - floor(-4/3) = 3, column -1 + 3
        assert_eq!(line_column(-1, 0.25, 0.75), 2);
        assert_eq!(line_column(-3, 0.25, 0.75), 2);
    }

    #[test]
    fn lambda_above_half_is_rejected() {
        assert!(check_densities(0.6, 0.75).is_err());
        assert!(check_densities(0.5, 0.75).is_ok());
    }
}
