//! Exact last-passage times by dynamic programming.
//!
//! `L(i,j) = w(i,j) + max(L(i-1,j), L(i,j-1))`, with start points carrying
//! their boundary value and contributing no weight of their own. Three
//! evaluation orders share the same cell rule: a full table (needed for path
//! reconstruction), an anti-diagonal wavefront with O(width) memory for a
//! single target, and a row sweep that serves many targets in one pass.
//! Exit indices are propagated through the recursion, so exit points never
//! require path storage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::WeightField;

/// Source of cell weights for the DP engines.
pub trait Weights {
    fn weight(&self, i: i64, j: i64) -> f64;
    /// Whether every cell of `r` can be queried.
    fn covers(&self, r: &Rect) -> bool;
}

impl Weights for WeightField {
    #[inline]
    fn weight(&self, i: i64, j: i64) -> f64 {
        self.weight_unchecked(i, j)
    }

    fn covers(&self, r: &Rect) -> bool {
        WeightField::covers(self, r)
    }
}

/// Explicit weights on a rectangle, row-major from `(i_min, j_min)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TableWeights {
    rect: Rect,
    values: Vec<f64>,
}

impl TableWeights {
    pub fn new(rect: Rect, values: Vec<f64>) -> Result<Self> {
        if rect.is_empty() || values.len() != rect.width() * rect.height() {
            return Err(invalid("weight table does not match its rectangle"));
        }
        Ok(TableWeights { rect, values })
    }

    pub fn from_fn(rect: Rect, f: impl Fn(i64, i64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rect.width() * rect.height());
        for j in rect.j_min..=rect.j_max {
            for i in rect.i_min..=rect.i_max {
                values.push(f(i, j));
            }
        }
        Self::new(rect, values)
    }
}

impl Weights for TableWeights {
    #[inline]
    fn weight(&self, i: i64, j: i64) -> f64 {
        let x = (i - self.rect.i_min) as usize;
        let y = (j - self.rect.j_min) as usize;
        self.values[y * self.rect.width() + x]
    }

    fn covers(&self, r: &Rect) -> bool {
        self.rect.contains_rect(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub i: i64,
    pub j: i64,
}

impl Point {
    pub const fn new(i: i64, j: i64) -> Self {
        Point { i, j }
    }

    /// Coordinatewise `<=`.
    pub fn leq(self, other: Point) -> bool {
        self.i <= other.i && self.j <= other.j
    }
}

/// Closed integer rectangle `[i_min, i_max] x [j_min, j_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub i_min: i64,
    pub i_max: i64,
    pub j_min: i64,
    pub j_max: i64,
}

impl Rect {
    pub const fn new(i_min: i64, i_max: i64, j_min: i64, j_max: i64) -> Self {
        Rect {
            i_min,
            i_max,
            j_min,
            j_max,
        }
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= self.i_min && i <= self.i_max && j >= self.j_min && j <= self.j_max
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        r.is_empty() || (self.contains(r.i_min, r.j_min) && self.contains(r.i_max, r.j_max))
    }

    pub fn is_empty(&self) -> bool {
        self.i_min > self.i_max || self.j_min > self.j_max
    }

    pub fn width(&self) -> usize {
        (self.i_max - self.i_min + 1).max(0) as usize
    }

    pub fn height(&self) -> usize {
        (self.j_max - self.j_min + 1).max(0) as usize
    }

    /// Smallest rectangle containing all points.
    pub fn hull(points: impl IntoIterator<Item = Point>) -> Option<Rect> {
        let mut it = points.into_iter();
        let p = it.next()?;
        let mut r = Rect::new(p.i, p.i, p.j, p.j);
        for q in it {
            r.i_min = r.i_min.min(q.i);
            r.i_max = r.i_max.max(q.i);
            r.j_min = r.j_min.min(q.j);
            r.j_max = r.j_max.max(q.j);
        }
        Some(r)
    }
}

/// Ordered start points of a line-to-point problem.
///
/// Points form a weakly down-right chain. Each point may carry a boundary
/// value (0 by default) and an integer tag, typically the line parameter `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StartSet {
    points: Vec<Point>,
    boundary: Option<Vec<f64>>,
    tags: Vec<i64>,
}

impl StartSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("start set is empty"));
        }
        for w in points.windows(2) {
            let (p, q) = (w[0], w[1]);
            if p == q || q.i < p.i || q.j > p.j {
                return Err(invalid(format!(
                    "start points must form a down-right chain: {p:?} then {q:?}"
                )));
            }
        }
        let tags = (0..points.len() as i64).collect();
        Ok(StartSet {
            points,
            boundary: None,
            tags,
        })
    }

    pub fn single(p: Point) -> Self {
        StartSet {
            points: vec![p],
            boundary: None,
            tags: vec![0],
        }
    }

    /// `{(col(k), k) : k_lo <= k <= k_hi}` ordered down-right (decreasing k),
    /// tagged with `k`.
    pub fn line(k_lo: i64, k_hi: i64, col: impl Fn(i64) -> i64) -> Result<Self> {
        if k_lo > k_hi {
            return Err(invalid("empty line range"));
        }
        let ks: Vec<i64> = (k_lo..=k_hi).rev().collect();
        let points = ks.iter().map(|&k| Point::new(col(k), k)).collect();
        Self::new(points)?.with_tags(ks)
    }

    pub fn with_boundary(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.points.len() {
            return Err(invalid("boundary values must match the start points"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("boundary values must be finite"));
        }
        self.boundary = Some(values);
        Ok(self)
    }

    pub fn with_tags(mut self, tags: Vec<i64>) -> Result<Self> {
        if tags.len() != self.points.len() {
            return Err(invalid("tags must match the start points"));
        }
        self.tags = tags;
        Ok(self)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn boundary_value(&self, idx: usize) -> f64 {
        self.boundary.as_ref().map_or(0.0, |b| b[idx])
    }

    pub fn tag(&self, idx: usize) -> i64 {
        self.tags[idx]
    }

    /// Index of the start with the given tag.
    pub fn index_of_tag(&self, tag: i64) -> Option<usize> {
        self.tags.iter().position(|&t| t == tag)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LppOutcome {
    Reached {
        value: f64,
        exit_index: usize,
        path: Option<Vec<Point>>,
    },
    /// No up-right path connects the start set to the target.
    NoPath,
}

impl LppOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LppOutcome::Reached { value, .. } => Some(*value),
            LppOutcome::NoPath => None,
        }
    }

    pub fn exit_index(&self) -> Option<usize> {
        match self {
            LppOutcome::Reached { exit_index, .. } => Some(*exit_index),
            LppOutcome::NoPath => None,
        }
    }

    pub fn path(&self) -> Option<&[Point]> {
        match self {
            LppOutcome::Reached { path: Some(p), .. } => Some(p),
            _ => None,
        }
    }

    pub fn is_no_path(&self) -> bool {
        matches!(self, LppOutcome::NoPath)
    }

    /// `value <= t`, with "no path" counting as `-infinity`.
    pub fn reached_by(&self, t: f64) -> bool {
        self.value().map_or(true, |v| v <= t)
    }
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Cell {
    v: f64,
    exit: u32,
}

const EMPTY: Cell = Cell { v: 0.0, exit: NONE };

/// Larger value wins; exact ties go to the smaller exit index.
#[inline]
fn pick(a: Cell, b: Cell) -> Cell {
    if a.exit == NONE {
        return b;
    }
    if b.exit == NONE {
        return a;
    }
    if a.v > b.v || (a.v == b.v && a.exit < b.exit) {
        a
    } else {
        b
    }
}

/// Starts grouped by row, restricted to a rectangle, each row sorted by column.
fn starts_by_row(starts: &StartSet, rect: &Rect) -> BTreeMap<i64, Vec<(i64, u32)>> {
    let mut rows: BTreeMap<i64, Vec<(i64, u32)>> = BTreeMap::new();
    for (idx, p) in starts.points.iter().enumerate() {
        if rect.contains(p.i, p.j) {
            rows.entry(p.j).or_default().push((p.i, idx as u32));
        }
    }
    for v in rows.values_mut() {
        v.sort_unstable();
    }
    rows
}

/// One DP row over `[i_min + lo, i_min + cur.len())`.
///
/// Reachable cells of a row form a suffix and the suffixes only grow from
/// row to row, so cells left of `lo` are never written and stay empty.
#[inline]
fn compute_row<W: Weights + ?Sized>(
    field: &W,
    starts: &StartSet,
    j: i64,
    i_min: i64,
    prev: Option<&[Cell]>,
    row_starts: &[(i64, u32)],
    lo: usize,
    cur: &mut [Cell],
) {
    let mut left = EMPTY;
    let mut sp = 0usize;
    for (x, slot) in cur.iter_mut().enumerate().skip(lo) {
        let i = i_min + x as i64;
        let below = match prev {
            Some(p) => p[x],
            None => EMPTY,
        };
        let best = pick(left, below);
        let c = if sp < row_starts.len() && row_starts[sp].0 == i {
            let idx = row_starts[sp].1;
            sp += 1;
            let own = Cell {
                v: starts.boundary_value(idx as usize),
                exit: idx,
            };
            pick(own, best)
        } else if best.exit != NONE {
            Cell {
                v: best.v + field.weight(i, j),
                exit: best.exit,
            }
        } else {
            EMPTY
        };
        *slot = c;
        left = c;
    }
}

#[inline]
fn row_lo(lo: usize, row_starts: &[(i64, u32)], i_min: i64) -> usize {
    row_starts.first().map_or(lo, |&(i, _)| lo.min((i - i_min) as usize))
}

fn check_cover<W: Weights + ?Sized>(field: &W, rect: &Rect) -> Result<()> {
    if field.covers(rect) {
        Ok(())
    } else {
        let corner = if field.covers(&Rect::new(rect.i_min, rect.i_min, rect.j_min, rect.j_min)) {
            (rect.i_max, rect.j_max)
        } else {
            (rect.i_min, rect.j_min)
        };
        Err(Error::OutOfWindow {
            i: corner.0,
            j: corner.1,
        })
    }
}

/// Rectangle spanned by the starts lying below-left of `to`, or `None`.
fn problem_rect(starts: &StartSet, to: Point) -> Option<Rect> {
    let r = Rect::hull(starts.points.iter().copied().filter(|p| p.leq(to)))?;
    Some(Rect::new(r.i_min, to.i, r.j_min, to.j))
}

/// Full DP table; keeps every cell so maximizers can be reconstructed.
#[derive(Clone, Debug)]
pub struct LppTable {
    rect: Rect,
    cells: Vec<Cell>,
}

impl LppTable {
    pub fn compute<W: Weights + ?Sized>(field: &W, starts: &StartSet, rect: Rect) -> Result<Self> {
        if rect.is_empty() {
            return Err(invalid("empty DP rectangle"));
        }
        check_cover(field, &rect)?;
        let w = rect.width();
        let rows = starts_by_row(starts, &rect);
        let mut cells = vec![EMPTY; w * rect.height()];
        let mut lo = w;
        for (y, j) in (rect.j_min..=rect.j_max).enumerate() {
            let (done, rest) = cells.split_at_mut(y * w);
            let prev = if y > 0 { Some(&done[(y - 1) * w..]) } else { None };
            let rs = rows.get(&j).map_or(&[][..], |v| v.as_slice());
            lo = row_lo(lo, rs, rect.i_min);
            compute_row(field, starts, j, rect.i_min, prev, rs, lo, &mut rest[..w]);
        }
        Ok(LppTable { rect, cells })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    fn cell(&self, p: Point) -> Option<Cell> {
        if !self.rect.contains(p.i, p.j) {
            return None;
        }
        let x = (p.i - self.rect.i_min) as usize;
        let y = (p.j - self.rect.j_min) as usize;
        let c = self.cells[y * self.rect.width() + x];
        (c.exit != NONE).then_some(c)
    }

    /// `(value, exit_index)` at `p`, or `None` if unreachable or outside.
    pub fn get(&self, p: Point) -> Option<(f64, usize)> {
        self.cell(p).map(|c| (c.v, c.exit as usize))
    }

    pub fn outcome(&self, p: Point) -> LppOutcome {
        match self.get(p) {
            Some((value, exit_index)) => LppOutcome::Reached {
                value,
                exit_index,
                path: None,
            },
            None => LppOutcome::NoPath,
        }
    }

    /// Maximizer ending at `to`, listed from its start point.
    ///
    /// Among predecessors that carry the same exit index and reproduce the
    /// value exactly, the step from below is preferred.
    pub fn backtrack_path<W: Weights + ?Sized>(&self, field: &W, starts: &StartSet, to: Point) -> Result<Vec<Point>> {
        let mut c = self
            .cell(to)
            .ok_or_else(|| Error::Invariant(format!("no recorded DP state at {to:?}")))?;
        let exit = c.exit;
        let origin = starts.points[exit as usize];
        let is_start = |p: Point| starts.points.binary_search_by(|q| {
            // down-right order: decreasing j, then increasing i
            p.j.cmp(&q.j).then(q.i.cmp(&p.i))
        });
        let mut p = to;
        let mut path = vec![p];
        while p != origin {
            let passes = is_start(p).is_ok();
            let target = c.v;
            let w = if passes { 0.0 } else { field.weight(p.i, p.j) };
            let mut next = None;
            for q in [Point::new(p.i, p.j - 1), Point::new(p.i - 1, p.j)] {
                if let Some(d) = self.cell(q) {
                    let reproduces = if passes { d.v == target } else { d.v + w == target };
                    if d.exit == exit && reproduces {
                        next = Some((q, d));
                        break;
                    }
                }
            }
            let (q, d) = next.ok_or_else(|| Error::Invariant(format!("backtrack stalled at {p:?}")))?;
            p = q;
            c = d;
            path.push(p);
        }
        path.reverse();
        Ok(path)
    }
}

/// Point-to-point last-passage time; the start cell carries no weight.
pub fn lpp_point_to_point<W: Weights + ?Sized>(field: &W, from: Point, to: Point, want_path: bool) -> Result<LppOutcome> {
    lpp_line_to_point(field, &StartSet::single(from), to, want_path)
}

/// Line-to-point last-passage time `max_k [b(k) + L(p_k -> to)]`.
pub fn lpp_line_to_point<W: Weights + ?Sized>(field: &W, starts: &StartSet, to: Point, want_path: bool) -> Result<LppOutcome> {
    let Some(rect) = problem_rect(starts, to) else {
        return Ok(LppOutcome::NoPath);
    };
    if !want_path {
        return Ok(line_to_points(field, starts, &[to])?.remove(0));
    }
    let table = LppTable::compute(field, starts, rect)?;
    match table.get(to) {
        None => Ok(LppOutcome::NoPath),
        Some((value, exit_index)) => {
            let path = table.backtrack_path(field, starts, to)?;
            Ok(LppOutcome::Reached {
                value,
                exit_index,
                path: Some(path),
            })
        }
    }
}

/// Anti-diagonal wavefront for a single target; memory O(width).
pub fn wavefront<W: Weights + ?Sized>(field: &W, starts: &StartSet, to: Point) -> Result<LppOutcome> {
    let Some(rect) = problem_rect(starts, to) else {
        return Ok(LppOutcome::NoPath);
    };
    check_cover(field, &rect)?;
    let w = rect.width();
    let h = rect.height();
    let diags = w + h - 1;
    let mut on_diag: Vec<Vec<(usize, u32)>> = vec![Vec::new(); diags];
    for (idx, p) in starts.points.iter().enumerate() {
        if rect.contains(p.i, p.j) {
            let x = (p.i - rect.i_min) as usize;
            let y = (p.j - rect.j_min) as usize;
            on_diag[x + y].push((x, idx as u32));
        }
    }
    let mut diag = vec![EMPTY; w];
    for (d, here) in on_diag.iter_mut().enumerate() {
        here.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        let x_lo = d.saturating_sub(h - 1);
        let x_hi = d.min(w - 1);
        let mut sp = 0usize;
        for x in (x_lo..=x_hi).rev() {
            let y = d - x;
            let below = if y >= 1 { diag[x] } else { EMPTY };
            let left = if x >= 1 { diag[x - 1] } else { EMPTY };
            let best = pick(left, below);
            let c = if sp < here.len() && here[sp].0 == x {
                let idx = here[sp].1;
                sp += 1;
                pick(
                    Cell {
                        v: starts.boundary_value(idx as usize),
                        exit: idx,
                    },
                    best,
                )
            } else if best.exit != NONE {
                let i = rect.i_min + x as i64;
                let j = rect.j_min + y as i64;
                Cell {
                    v: best.v + field.weight(i, j),
                    exit: best.exit,
                }
            } else {
                EMPTY
            };
            diag[x] = c;
        }
    }
    let c = diag[w - 1];
    if c.exit == NONE {
        Ok(LppOutcome::NoPath)
    } else {
        Ok(LppOutcome::Reached {
            value: c.v,
            exit_index: c.exit as usize,
            path: None,
        })
    }
}

/// Line-to-point values for many targets in one row sweep.
pub fn line_to_points<W: Weights + ?Sized>(field: &W, starts: &StartSet, targets: &[Point]) -> Result<Vec<LppOutcome>> {
    let mut out = vec![LppOutcome::NoPath; targets.len()];
    let Some(tr) = Rect::hull(targets.iter().copied()) else {
        return Ok(out);
    };
    let corner = Point::new(tr.i_max, tr.j_max);
    let Some(rect) = problem_rect(starts, corner) else {
        return Ok(out);
    };
    check_cover(field, &rect)?;
    let w = rect.width();
    let rows = starts_by_row(starts, &rect);
    let mut by_row: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (n, t) in targets.iter().enumerate() {
        if rect.contains(t.i, t.j) {
            by_row.entry(t.j).or_default().push(n);
        }
    }
    let mut prev = vec![EMPTY; w];
    let mut cur = vec![EMPTY; w];
    let mut lo = w;
    for (y, j) in (rect.j_min..=rect.j_max).enumerate() {
        let rs = rows.get(&j).map_or(&[][..], |v| v.as_slice());
        lo = row_lo(lo, rs, rect.i_min);
        compute_row(field, starts, j, rect.i_min, (y > 0).then_some(&prev[..]), rs, lo, &mut cur);
        if let Some(ns) = by_row.get(&j) {
            for &n in ns {
                let c = cur[(targets[n].i - rect.i_min) as usize];
                if c.exit != NONE {
                    out[n] = LppOutcome::Reached {
                        value: c.v,
                        exit_index: c.exit as usize,
                        path: None,
                    };
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(out)
}

/// True iff any target lies on the path.
pub fn maximizer_hits(path: &[Point], targets: &[Point]) -> bool {
    let set: std::collections::HashSet<Point> = path.iter().copied().collect();
    targets.iter().any(|t| set.contains(t))
}
