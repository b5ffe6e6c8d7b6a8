//! Stationary last passage percolation from the full line
//! `{(floor((lambda-1) k / lambda), k) : k in Z}` with random boundary values,
//! the comparison with the half-line problem, exit-point tails and the good
//! event.
//!
//! Exit points are row indices `k` of the start line. Moving the target
//! `P(x) = P + x(1,-1)` to larger `x` moves exits to smaller `k`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lpp::{line_to_points, lpp_line_to_point, LppOutcome, Point, Rect, StartSet, Weights};
use crate::rng::{cell_counter, replica_seed, SeedSpec, WeightField, STREAM_BULK, STREAM_P, STREAM_Q};
use crate::shock::{drift, line_column, point_p_real, round_lattice, ShockConstants};

/// Boundary values `omega(k)` on a row range of the full line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeightSeq {
    pub varrho: f64,
    pub lambda_line: f64,
    k_lo: i64,
    k_hi: i64,
    values: Vec<f64>,
}

impl BoundaryWeightSeq {
    /// Explicit values for rows `k_lo..=k_hi`; `omega(0)` must be `0` when
    /// row 0 is included.
    pub fn from_values(lambda_line: f64, varrho: f64, k_lo: i64, values: Vec<f64>) -> Result<Self> {
        check_line(lambda_line)?;
        if values.is_empty() {
            return Err(invalid("no boundary values"));
        }
        let k_hi = k_lo + values.len() as i64 - 1;
        if k_lo <= 0 && k_hi >= 0 && values[(-k_lo) as usize] != 0.0 {
            return Err(invalid("omega(0) must vanish"));
        }
        Ok(BoundaryWeightSeq { varrho, lambda_line, k_lo, k_hi, values })
    }

    pub fn k_range(&self) -> (i64, i64) {
        (self.k_lo, self.k_hi)
    }

    pub fn value(&self, k: i64) -> Option<f64> {
        (k >= self.k_lo && k <= self.k_hi).then(|| self.values[(k - self.k_lo) as usize])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_line(lambda_line: f64) -> Result<()> {
    if !(lambda_line > 0.0 && lambda_line < 1.0) {
        return Err(invalid(format!("line density must lie in (0,1), got {lambda_line}")));
    }
    Ok(())
}

fn check_varrho(varrho: f64) -> Result<()> {
    if !(varrho > 0.0 && varrho < 1.0) {
        return Err(invalid(format!("varrho must lie in (0,1), got {varrho}")));
    }
    Ok(())
}

/// `p_i ~ Exp(1 - varrho)` indexed by column.
pub fn p_weight(seed: SeedSpec, varrho: f64, i: i64) -> f64 {
    seed.with_stream(STREAM_P).key().exp1(cell_counter(i, 0)) / (1.0 - varrho)
}

/// `q_i ~ Exp(varrho)` indexed by row.
pub fn q_weight(seed: SeedSpec, varrho: f64, i: i64) -> f64 {
    seed.with_stream(STREAM_Q).key().exp1(cell_counter(i, 0)) / varrho
}

/// `omega(k)`: the signed sum of the `p` over the columns and the `q` over the
/// rows passed on the way from `(0,0)` to `(m(k), k)` along the line. Going
/// up or right adds, going down or left subtracts. The `p` and `q` share the
/// master seed of `seed` with their own stream tags, so models with different
/// `varrho` are coupled monotonically.
pub fn boundary_weights(lambda_line: f64, varrho: f64, k_range: (i64, i64), seed: SeedSpec) -> Result<BoundaryWeightSeq> {
    check_line(lambda_line)?;
    check_varrho(varrho)?;
    let (k_lo, k_hi) = k_range;
    if !(k_lo <= 0 && 0 <= k_hi) {
        return Err(invalid("the row range must contain 0"));
    }
    let p = |i| p_weight(seed, varrho, i);
    let q = |i| q_weight(seed, varrho, i);
    let mut values = vec![0.0; (k_hi - k_lo + 1) as usize];
    // k > 0: -sum_{i=m(k)+1}^{0} p_i + sum_{i=1}^{k} q_i
    let (mut psum, mut qsum, mut col) = (0.0, 0.0, 0i64);
    for k in 1..=k_hi {
        qsum += q(k);
        let m = line_column(lambda_line, k);
        while col > m {
            psum += p(col);
            col -= 1;
        }
        values[(k - k_lo) as usize] = -psum + qsum;
    }
    // k < 0: sum_{i=1}^{m(k)} p_i - sum_{i=k+1}^{0} q_i
    let (mut psum, mut qsum, mut col) = (0.0, 0.0, 0i64);
    for k in (k_lo..0).rev() {
        qsum += q(k + 1);
        let m = line_column(lambda_line, k);
        while col < m {
            col += 1;
            psum += p(col);
        }
        values[(k - k_lo) as usize] = psum - qsum;
    }
    Ok(BoundaryWeightSeq { varrho, lambda_line, k_lo, k_hi, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryOutcome {
    pub value: f64,
    pub exit: i64,
}

/// Rows of the line with density `d` whose points lie weakly below-left of
/// `target`: `k <= target.j` and `m(k) <= target.i`.
pub fn admissible_rows(d: f64, target: Point) -> (i64, i64) {
    let hi = target.j;
    // m is nonincreasing in k; find the smallest k with m(k) <= target.i
    let mut k = hi;
    if line_column(d, k) > target.i {
        // even the top row is right of the target
        return (hi + 1, hi);
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
    (k, hi)
}

/// Row where the backward characteristic of direction `dir` through `target`
/// meets the line of density `d`.
pub fn characteristic_exit(d: f64, dir: (f64, f64), target: (f64, f64)) -> f64 {
    let r = (d - 1.0) / d;
    // target - s dir lies on x = r y
    let s = (target.0 - r * target.1) / (dir.0 - r * dir.1);
    target.1 - s * dir.1
}

/// Maximum over the given rows of the boundary value plus the passage time,
/// for several targets at once. A maximiser on a window end that is not the
/// end of the admissible rows is a window overflow.
fn solve_rows<W: Weights + ?Sized>(
    field: &W,
    d: f64,
    rows: (i64, i64),
    allowed: (i64, i64),
    boundary: Option<&BoundaryWeightSeq>,
    targets: &[Point],
) -> Result<Vec<StationaryOutcome>> {
    let (lo, hi) = rows;
    if lo > hi {
        return Err(Error::WindowOverflow("empty row window".into()));
    }
    let mut starts = StartSet::line(lo, hi, |k| line_column(d, k))?;
    if let Some(bw) = boundary {
        let vals = (lo..=hi)
            .rev()
            .map(|k| bw.value(k).ok_or_else(|| Error::WindowOverflow(format!("no boundary value for row {k}"))))
            .collect::<Result<Vec<_>>>()?;
        starts = starts.with_boundary(vals)?;
    }
    let outs = line_to_points(field, &starts, targets)?;
    outs.iter()
        .zip(targets)
        .map(|(o, t)| match o {
            LppOutcome::Reached { value, exit_index, .. } => {
                let k = starts.tag(*exit_index);
                let (alo, ahi) = admissible_rows(d, *t);
                let (alo, ahi) = (alo.max(allowed.0), ahi.min(allowed.1));
                if (k == lo && lo > alo) || (k == hi && hi < ahi) {
                    return Err(Error::WindowOverflow(format!("exit {k} on the row window [{lo}, {hi}]")));
                }
                Ok(StationaryOutcome { value: *value, exit: k })
            }
            LppOutcome::NoPath => Err(Error::Invariant(format!("{t:?} is unreachable from the rows [{lo}, {hi}]"))),
        })
        .collect()
}

/// `L^{stat}` and its exit for one target, using every row of `bw` that can
/// reach it.
pub fn stationary_lpp<W: Weights + ?Sized>(field: &W, bw: &BoundaryWeightSeq, target: Point) -> Result<StationaryOutcome> {
    let (alo, ahi) = admissible_rows(bw.lambda_line, target);
    let (lo, hi) = (alo.max(bw.k_lo), ahi.min(bw.k_hi));
    let out = solve_rows(field, bw.lambda_line, (lo, hi), (alo, ahi), Some(bw), &[target])?;
    Ok(out[0])
}

/// Maximum over the rows of `bw` taken as the whole line, without the
/// truncation check.
pub fn stationary_lpp_truncated<W: Weights + ?Sized>(field: &W, bw: &BoundaryWeightSeq, target: Point) -> Result<StationaryOutcome> {
    let (alo, ahi) = admissible_rows(bw.lambda_line, target);
    let rows = (alo.max(bw.k_lo), ahi.min(bw.k_hi));
    let out = solve_rows(field, bw.lambda_line, rows, rows, Some(bw), &[target])?;
    Ok(out[0])
}

/// A line problem with automatic row windows: the half-lines of the shock or
/// the stationary full line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineModel {
    /// Inclination density of the line.
    pub d: f64,
    /// Rows that belong to the line.
    pub rows: (i64, i64),
    /// `Some((varrho, seed))` for random boundary values.
    pub boundary: Option<(f64, SeedSpec)>,
}

impl LineModel {
    /// `L_lambda = {k >= 0}` without boundary values.
    pub fn lambda_half_line(lambda: f64) -> Self {
        LineModel { d: lambda, rows: (0, i64::MAX / 4), boundary: None }
    }

    /// `L_rho = {k < 0}` without boundary values.
    pub fn rho_half_line(rho: f64) -> Self {
        LineModel { d: rho, rows: (i64::MIN / 4, -1), boundary: None }
    }

    pub fn stationary(lambda_line: f64, varrho: f64, seed: SeedSpec) -> Self {
        LineModel {
            d: lambda_line,
            rows: (i64::MIN / 4, i64::MAX / 4),
            boundary: Some((varrho, seed)),
        }
    }

    /// Direction of the characteristics.
    pub fn char_dir(&self) -> (f64, f64) {
        let r = self.boundary.map_or(self.d, |b| b.0);
        ((1.0 - r).powi(2), r.powi(2))
    }

    /// Solves for all targets with the row window `centre +- halfwidth`,
    /// doubling the halfwidth until no maximiser sits on a truncated end.
    pub fn solve<W: Weights + ?Sized>(&self, field: &W, targets: &[Point], centre: f64, halfwidth: f64) -> Result<Vec<StationaryOutcome>> {
        if targets.is_empty() {
            return Ok(Vec::new());
        }
        if let Some((v, _)) = self.boundary {
            check_varrho(v)?;
        }
        let mut alo = i64::MAX;
        let mut ahi = i64::MIN;
        for t in targets {
            let (a, b) = admissible_rows(self.d, *t);
            alo = alo.min(a);
            ahi = ahi.max(b);
        }
        let alo = alo.max(self.rows.0);
        let ahi = ahi.min(self.rows.1);
        if alo > ahi {
            return Err(invalid("no row of the line reaches the targets"));
        }
        let mut h = halfwidth.max(1.0);
        loop {
            let lo = alo.max((centre - h).floor() as i64);
            let hi = ahi.min((centre + h).ceil() as i64);
            let full = lo == alo && hi == ahi;
            let bw = match self.boundary {
                Some((varrho, seed)) => Some(boundary_weights(self.d, varrho, (lo.min(0), hi.max(0)), seed)?),
                None => None,
            };
            let res = if lo > hi {
                Err(Error::WindowOverflow("window misses the admissible rows".into()))
            } else {
                solve_rows(field, self.d, (lo, hi), self.rows, bw.as_ref(), targets)
            };
            match res {
                Err(Error::WindowOverflow(_)) if !full => h *= 2.0,
                other => return other,
            }
        }
    }

    /// Single-target solve that also returns the maximising path. Boundary
    /// values are not supported here.
    pub fn solve_path<W: Weights + ?Sized>(&self, field: &W, target: Point, centre: f64, halfwidth: f64) -> Result<(StationaryOutcome, Vec<Point>)> {
        if self.boundary.is_some() {
            return Err(invalid("paths are only recorded without boundary values"));
        }
        let (a, b) = admissible_rows(self.d, target);
        let (alo, ahi) = (a.max(self.rows.0), b.min(self.rows.1));
        if alo > ahi {
            return Err(invalid("no row of the line reaches the target"));
        }
        let mut h = halfwidth.max(1.0);
        loop {
            let lo = alo.max((centre - h).floor() as i64);
            let hi = ahi.min((centre + h).ceil() as i64);
            let full = lo == alo && hi == ahi;
            if lo <= hi {
                let starts = StartSet::line(lo, hi, |k| line_column(self.d, k))?;
                if let LppOutcome::Reached { value, exit_index, path } = lpp_line_to_point(field, &starts, target, true)? {
                    let k = starts.tag(exit_index);
                    if full || !((k == lo && lo > alo) || (k == hi && hi < ahi)) {
                        let path = path.ok_or_else(|| Error::Invariant("path not recorded".into()))?;
                        return Ok((StationaryOutcome { value, exit: k }, path));
                    }
                } else if full {
                    return Err(Error::Invariant(format!("{target:?} is unreachable")));
                }
            }
            h *= 2.0;
        }
    }

    /// Default window: the characteristic exit of the mean target with
    /// halfwidth `max(20, 12 N^{2/3})`.
    pub fn solve_around<W: Weights + ?Sized>(&self, field: &W, targets: &[Point], n: f64) -> Result<Vec<StationaryOutcome>> {
        self.solve(field, targets, self.centre_for(targets)?, default_halfwidth(n))
    }

    /// Characteristic exit of the mean of `targets`.
    pub fn centre_for(&self, targets: &[Point]) -> Result<f64> {
        if targets.is_empty() {
            return Err(invalid("no targets"));
        }
        let m = targets.len() as f64;
        let ti = targets.iter().map(|t| t.i as f64).sum::<f64>() / m;
        let tj = targets.iter().map(|t| t.j as f64).sum::<f64>() / m;
        Ok(characteristic_exit(self.d, self.char_dir(), (ti, tj)))
    }
}

/// `max(20, 12 N^{2/3})`.
pub fn default_halfwidth(n: f64) -> f64 {
    (12.0 * n.powf(2.0 / 3.0)).max(20.0)
}

/// Unbounded bulk field for a replica.
pub fn bulk_field(seed: SeedSpec) -> WeightField {
    let big = 1i64 << 30;
    WeightField::exp1(seed.with_stream(STREAM_BULK), Rect::new(-big, big, -big, big)).expect("valid window")
}

/// `lambda +- r N^{-1/3}`, checked to stay in `(0,1)`.
pub fn shifted_densities(lambda: f64, r: f64, n: f64) -> Result<(f64, f64)> {
    let s = r * n.powf(-1.0 / 3.0);
    let (m, p) = (lambda - s, lambda + s);
    if !(m > 0.0 && p < 1.0) {
        return Err(invalid(format!(
            "lambda -+ r N^(-1/3) = ({m}, {p}) leaves (0,1) for lambda = {lambda}, r = {r}, N = {n}"
        )));
    }
    Ok((m, p))
}

/// Lattice point `P(x) = P + x(1,-1)`.
pub fn p_of_x(sc: &ShockConstants, n: f64, x: f64) -> Point {
    let (a, b) = point_p_real(n, 0.0, 0.0, sc);
    Point::new(round_lattice(a + x), round_lattice(b - x))
}

/// Increments that agree mathematically are sums of the same weights taken
/// in different orders; they may differ by a few ulps of the summed values.
pub const ROUNDING_ULPS: f64 = 64.0;

/// `a <= b` up to rounding of sums of size `scale`.
pub fn leq_rounded(a: f64, b: f64, scale: f64) -> bool {
    a <= b + ROUNDING_ULPS * f64::EPSILON * scale.abs()
}

/// Result of the comparison between the stationary model and the half-line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingCheck {
    /// `Z^stat(x1) <= Z_lambda(x2)`.
    pub upside_premise: bool,
    /// `L(x2) - L(x1) <= L^stat(x2) - L^stat(x1)`.
    pub upside_holds: bool,
    /// `Z_lambda(x1) <= Z^stat(x2)`.
    pub downside_premise: bool,
    /// `L^stat(x2) - L^stat(x1) <= L(x2) - L(x1)`.
    pub downside_holds: bool,
    pub half_line: [StationaryOutcome; 2],
    pub stationary: [StationaryOutcome; 2],
}

impl CouplingCheck {
    /// A conclusion failed although its premise held.
    pub fn violated(&self) -> bool {
        (self.upside_premise && !self.upside_holds) || (self.downside_premise && !self.downside_holds)
    }
}

/// Compares half-line and stationary increments between `p1` and
/// `p2 = p1 + s(1,-1)`, `s >= 0`. The half-line is the part `k >= 0` of the
/// line of `bw`; both problems use all rows of `bw` that reach the targets,
/// and a maximiser on a truncated end is a window overflow.
pub fn coupling_inequality_check<W: Weights + ?Sized>(field: &W, bw: &BoundaryWeightSeq, p1: Point, p2: Point) -> Result<CouplingCheck> {
    if p2.i - p1.i != p1.j - p2.j || p2.i < p1.i {
        return Err(invalid("p2 must equal p1 + s(1,-1) with s >= 0"));
    }
    let d = bw.lambda_line;
    let rows_for = |lo_allowed: i64| {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for t in [p1, p2] {
            let (a, b) = admissible_rows(d, t);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo.max(lo_allowed).max(bw.k_lo), hi.min(bw.k_hi))
    };
    let stat = solve_rows(field, d, rows_for(i64::MIN), (i64::MIN, i64::MAX), Some(bw), &[p1, p2])?;
    let half = solve_rows(field, d, rows_for(0), (0, i64::MAX), None, &[p1, p2])?;
    Ok(compare(&half, &stat))
}

fn compare(half: &[StationaryOutcome], stat: &[StationaryOutcome]) -> CouplingCheck {
    let dl = half[1].value - half[0].value;
    let ds = stat[1].value - stat[0].value;
    let scale = half.iter().chain(stat).map(|o| o.value.abs()).fold(0.0, f64::max);
    CouplingCheck {
        upside_premise: stat[0].exit <= half[1].exit,
        upside_holds: leq_rounded(dl, ds, scale),
        downside_premise: half[0].exit <= stat[1].exit,
        downside_holds: leq_rounded(ds, dl, scale),
        half_line: [half[0], half[1]],
        stationary: [stat[0], stat[1]],
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub trials: usize,
    pub upside_premises: usize,
    pub downside_premises: usize,
    pub violations: usize,
}

/// One random instance of the comparison on the bulk field of `seed`.
pub fn coupling_sample(sc: &ShockConstants, n: f64, varrho: f64, p1: Point, p2: Point, seed: SeedSpec) -> Result<CouplingCheck> {
    let field = bulk_field(seed);
    let stat = LineModel::stationary(sc.lambda, varrho, seed).solve_around(&field, &[p1, p2], n)?;
    let half = LineModel::lambda_half_line(sc.lambda).solve_around(&field, &[p1, p2], n)?;
    Ok(compare(&half, &stat))
}

/// Monte Carlo run of the comparison at `P(x1)`, `P(x2)` with
/// `varrho = lambda + shift` (`shift` may be negative).
pub fn coupling_trials(sc: &ShockConstants, n: f64, varrho: f64, x1: f64, x2: f64, trials: usize, master: u64) -> Result<CouplingSummary> {
    if !(0.0 < x1 && x1 < x2) {
        return Err(invalid("need 0 < x1 < x2"));
    }
    check_varrho(varrho)?;
    let (p1, p2) = (p_of_x(sc, n, x1), p_of_x(sc, n, x2));
    let mut s = CouplingSummary { trials, ..Default::default() };
    for r in 0..trials {
        let seed = SeedSpec::new(replica_seed(master, r as u64), STREAM_BULK);
        let c = coupling_sample(sc, n, varrho, p1, p2, seed)?;
        s.upside_premises += usize::from(c.upside_premise);
        s.downside_premises += usize::from(c.downside_premise);
        s.violations += usize::from(c.violated());
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub m: f64,
    pub probability: f64,
    /// `M N^{2/3}` exceeds every exit the geometry allows; the estimate is 0
    /// by truncation and carries no information.
    pub truncated: bool,
}

/// `P(|Z~(c N^{1/3})| >= M N^{2/3})` for the stationary model with parameter
/// `varrho` on the line of density `lambda_line`, targets
/// `((1-varrho)^2 N + x, varrho^2 N - x)`.
pub fn exit_tail_profile(n: f64, varrho: f64, lambda_line: f64, c: f64, m_grid: &[f64], replicas: usize, master: u64) -> Result<Vec<TailPoint>> {
    check_varrho(varrho)?;
    check_line(lambda_line)?;
    if m_grid.windows(2).any(|w| w[1] <= w[0]) || m_grid.iter().any(|&m| m <= 0.0) {
        return Err(invalid("M grid must be increasing and positive"));
    }
    let x = c * n.cbrt();
    let target = Point::new(
        round_lattice((1.0 - varrho).powi(2) * n + x),
        round_lattice(varrho.powi(2) * n - x),
    );
    let (alo, ahi) = admissible_rows(lambda_line, target);
    let reach = alo.abs().max(ahi.abs()) as f64;
    let scale = n.powf(2.0 / 3.0);
    let mut exits = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let seed = SeedSpec::new(replica_seed(master, r as u64), STREAM_BULK);
        let field = bulk_field(seed);
        let m = LineModel::stationary(lambda_line, varrho, seed);
        exits.push(m.solve_around(&field, &[target], n)?[0].exit);
    }
    Ok(tail_points(&exits, 0.0, scale, reach, m_grid))
}

fn tail_points(exits: &[i64], centre: f64, scale: f64, reach: f64, m_grid: &[f64]) -> Vec<TailPoint> {
    m_grid
        .iter()
        .map(|&m| {
            let hits = exits.iter().filter(|&&z| (z as f64 - centre).abs() >= m * scale).count();
            TailPoint {
                m,
                probability: hits as f64 / exits.len().max(1) as f64,
                truncated: m * scale > reach,
            }
        })
        .collect()
}

/// `P(|Z_lambda(C N^{1/3}) - xi_lambda N| >= M N^{2/3})` for the half-line.
pub fn half_line_exit_tail_profile(sc: &ShockConstants, n: f64, c: f64, m_grid: &[f64], replicas: usize, master: u64) -> Result<Vec<TailPoint>> {
    let target = p_of_x(sc, n, c * n.cbrt());
    let (_, ahi) = admissible_rows(sc.lambda, target);
    let centre = sc.xi_lambda * n;
    let reach = centre.max(ahi as f64 - centre);
    let mut exits = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let field = bulk_field(SeedSpec::new(replica_seed(master, r as u64), STREAM_BULK));
        exits.push(LineModel::lambda_half_line(sc.lambda).solve_around(&field, &[target], n)?[0].exit);
    }
    Ok(tail_points(&exits, centre, n.powf(2.0 / 3.0), reach, m_grid))
}

/// Per-replica data of the good event and the sandwich comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodEventSample {
    pub holds: bool,
    /// `u` grid in `[0, C]`.
    pub u: Vec<f64>,
    /// Raw half-line values `L(P(u N^{1/3}))`.
    pub half_line: Vec<f64>,
    /// Raw stationary values for `lambda_-` and `lambda_+`.
    pub stat_minus: Vec<f64>,
    pub stat_plus: Vec<f64>,
}

impl GoodEventSample {
    /// Sandwich of the increments between consecutive grid points:
    /// `stat_minus <= half_line <= stat_plus` for every `u < v`.
    pub fn sandwich_holds(&self) -> bool {
        let n = self.u.len();
        let scale = self.half_line.iter().chain(&self.stat_minus).chain(&self.stat_plus).map(|v| v.abs()).fold(0.0, f64::max);
        (0..n).all(|a| {
            (a + 1..n).all(|b| {
                let dl = self.half_line[b] - self.half_line[a];
                let dm = self.stat_minus[b] - self.stat_minus[a];
                let dp = self.stat_plus[b] - self.stat_plus[a];
                leq_rounded(dm, dl, scale) && leq_rounded(dl, dp, scale)
            })
        })
    }
}

/// One replica of the good event
/// `{Z_lambda(0) <= Z^{stat,lambda_-}(C N^{1/3})} and {Z^{stat,lambda_+}(0) <= Z_lambda(C N^{1/3})}`
/// with the exits as row indices, and the values on `u_grid`.
pub fn good_event_sample(sc: &ShockConstants, n: f64, r: f64, c: f64, u_grid: &[f64], seed: SeedSpec) -> Result<GoodEventSample> {
    let (lm, lp) = shifted_densities(sc.lambda, r, n)?;
    let cn = n.cbrt();
    let mut xs: Vec<f64> = vec![0.0, c * cn];
    xs.extend(u_grid.iter().map(|u| u * cn));
    let pts: Vec<Point> = xs.iter().map(|&x| p_of_x(sc, n, x)).collect();
    let field = bulk_field(seed);
    let half = LineModel::lambda_half_line(sc.lambda).solve_around(&field, &pts, n)?;
    let minus = LineModel::stationary(sc.lambda, lm, seed).solve_around(&field, &pts, n)?;
    let plus = LineModel::stationary(sc.lambda, lp, seed).solve_around(&field, &pts, n)?;
    let holds = half[0].exit <= minus[1].exit && plus[0].exit <= half[1].exit;
    Ok(GoodEventSample {
        holds,
        u: u_grid.to_vec(),
        half_line: half[2..].iter().map(|o| o.value).collect(),
        stat_minus: minus[2..].iter().map(|o| o.value).collect(),
        stat_plus: plus[2..].iter().map(|o| o.value).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodEventReport {
    pub r: f64,
    pub replicas: usize,
    pub complement: f64,
    /// Replicas on the good event where the sandwich failed.
    pub sandwich_failures: usize,
}

/// Estimate of `P(G_N(r)^c)`.
pub fn good_event_probability(sc: &ShockConstants, n: f64, r: f64, c: f64, replicas: usize, master: u64) -> Result<GoodEventReport> {
    if !(r > 0.0) {
        return Err(invalid("r must be positive"));
    }
    shifted_densities(sc.lambda, r, n)?;
    let u_grid: Vec<f64> = (1..=4).map(|k| c * k as f64 / 4.0).collect();
    let mut bad = 0;
    let mut sandwich_failures = 0;
    for k in 0..replicas {
        let seed = SeedSpec::new(replica_seed(master, k as u64), STREAM_BULK);
        let s = good_event_sample(sc, n, r, c, &u_grid, seed)?;
        if s.holds {
            sandwich_failures += usize::from(!s.sandwich_holds());
        } else {
            bad += 1;
        }
    }
    Ok(GoodEventReport {
        r,
        replicas,
        complement: bad as f64 / replicas.max(1) as f64,
        sandwich_failures,
    })
}

/// Samples of the stationary process on `u_grid` for `varrho = lambda +- r N^{-1/3}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledIncrements {
    pub u: Vec<f64>,
    /// `B(u) = (L(P(u N^{1/3})) - L(P(0)) + drift(lambda) u N^{1/3}) / N^{1/3}`.
    pub b: Vec<f64>,
    /// `(L(P(u N^{1/3})) - L(P(0)) - E[.]) / N^{1/6}` with the exact mean of
    /// the increment sums.
    pub centred: Vec<f64>,
}

pub fn stationary_rescaled_increments(sc: &ShockConstants, n: f64, u_grid: &[f64], r: f64, plus: bool, seed: SeedSpec) -> Result<RescaledIncrements> {
    let (lm, lp) = shifted_densities(sc.lambda, r, n)?;
    let varrho = if plus { lp } else { lm };
    let cn = n.cbrt();
    let mut pts = vec![p_of_x(sc, n, 0.0)];
    pts.extend(u_grid.iter().map(|&u| p_of_x(sc, n, u * cn)));
    let field = bulk_field(seed);
    let out = LineModel::stationary(sc.lambda, varrho, seed).solve_around(&field, &pts, n)?;
    let base = out[0].value;
    let mean_rate = (2.0 * varrho - 1.0) / (varrho * (1.0 - varrho));
    let mut b = Vec::with_capacity(u_grid.len());
    let mut centred = Vec::with_capacity(u_grid.len());
    for (k, o) in out[1..].iter().enumerate() {
        let inc = o.value - base;
        let steps = (pts[k + 1].i - pts[0].i) as f64;
        b.push((inc + drift(sc.lambda) * u_grid[k] * cn) / cn);
        centred.push((inc - mean_rate * steps) / n.powf(1.0 / 6.0));
    }
    Ok(RescaledIncrements { u: u_grid.to_vec(), b, centred })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characteristic_exit_on_line() {
        // (0.25, 0.75), N = 500: P = (500, 500), exit row 1000/3
        let k = characteristic_exit(0.25, (0.5625, 0.0625), (500.0, 500.0));
        assert!((k - 1000.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn admissible_rows_respect_columns() {
        let (lo, hi) = admissible_rows(0.5, Point::new(10, 7));
        assert_eq!((lo, hi), (-10, 7));
    }
}
