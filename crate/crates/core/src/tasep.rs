//! Continuous-time TASEP with one second-class particle.
//!
//! Two drivers share the initial data. [`run_until`] and [`run_discrepancy`]
//! use independent rate-1 Poisson clocks attached to sites, the standard
//! basic coupling. [`FieldTasep`] instead reads every waiting time from a
//! [`WeightField`], which makes its trajectories comparable path by path with
//! last-passage times computed from the same field.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lpp::{LppTable, Point, Rect, StartSet};
use crate::rng::{cell_counter, SeedSpec, StreamKey, WeightField};
use crate::shock::{floor_tol, mu0, speed};

/// Initial site of particle `n` (`n != 0`): `-floor(n / lambda)` on the left,
/// `-floor(n / rho)` on the right.
pub fn initial_site(n: i64, lambda: f64, rho: f64) -> i64 {
    if n > 0 {
        -floor_tol(n as f64 / lambda)
    } else {
        -floor_tol(n as f64 / rho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TasepConfig {
    pub lambda: f64,
    pub rho: f64,
    pub horizon: f64,
    pub window_halfwidth: i64,
}

/// `2t + 10 sqrt(t) + 10`, rounded up.
pub fn light_cone(t: f64) -> i64 {
    (2.0 * t + 10.0 * t.sqrt() + 10.0).ceil() as i64
}

impl TasepConfig {
    pub fn new(lambda: f64, rho: f64, horizon: f64) -> Result<Self> {
        let c = TasepConfig {
            lambda,
            rho,
            horizon,
            window_halfwidth: light_cone(horizon.max(0.0)),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let dens = |d: f64| d > 0.0 && d < 1.0;
        if !(dens(self.lambda) && dens(self.rho)) {
            return Err(invalid("densities must lie in (0,1)"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon must be a finite nonnegative time"));
        }
        if self.window_halfwidth < light_cone(self.horizon) {
            return Err(invalid(format!(
                "window half-width {} is below the light cone {} of horizon {}",
                self.window_halfwidth,
                light_cone(self.horizon),
                self.horizon
            )));
        }
        Ok(())
    }

    /// `lambda < rho`, the shock ordering.
    pub fn is_shock(&self) -> bool {
        self.lambda < self.rho
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    Hole,
    First(i64),
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockSample {
    pub x_t: i64,
    pub n_t: i64,
    pub x_rescaled: f64,
    pub n_rescaled: f64,
}

impl ShockSample {
    pub fn new(x_t: i64, n_t: i64, t: f64, lambda: f64, rho: f64) -> Self {
        let c = t.cbrt();
        ShockSample {
            x_t,
            n_t,
            x_rescaled: (x_t as f64 - speed(lambda, rho) * t) / c,
            n_rescaled: (n_t as f64 - 2.0 * t / mu0(lambda, rho)) / c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct Time(f64);

impl Eq for Time {}

impl Ord for Time {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Site clocks: ring `k` of site `x` happens `Exp(1)` after ring `k-1`.
#[derive(Clone, Debug)]
struct SiteClocks {
    seed: SeedSpec,
    key: StreamKey,
    heap: BinaryHeap<Reverse<(Time, i64, u32)>>,
}

impl SiteClocks {
    fn new(seed: SeedSpec, lo: i64, hi: i64) -> Self {
        let key = seed.key();
        let heap = (lo..=hi)
            .map(|x| Reverse((Time(key.exp1(cell_counter(x, 0))), x, 0u32)))
            .collect();
        SiteClocks { seed, key, heap }
    }

    fn peek(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse((t, _, _))| t.0)
    }

    fn pop(&mut self) -> (f64, i64) {
        let Reverse((t, x, k)) = self.heap.pop().expect("clock heap is never empty");
        let next = t.0 + self.key.exp1(cell_counter(x, i64::from(k) + 1));
        self.heap.push(Reverse((Time(next), x, k + 1)));
        (t.0, x)
    }
}

/// TASEP on the window `[-w, w]` with a second-class particle.
#[derive(Clone, Debug)]
pub struct TasepState {
    config: TasepConfig,
    lo: i64,
    sites: Vec<Site>,
    x: i64,
    n_steps: i64,
    left_swaps: i64,
    right_jumps: i64,
    time: f64,
    /// Sites `<= taint_left` or `>= taint_right` may differ from the infinite system.
    taint_left: i64,
    taint_right: i64,
    clocks: Option<SiteClocks>,
}

pub fn init_shock_state(config: TasepConfig) -> Result<TasepState> {
    config.validate()?;
    let w = config.window_halfwidth;
    let mut sites = vec![Site::Hole; (2 * w + 1) as usize];
    let put = |sites: &mut Vec<Site>, x: i64, s: Site| sites[(x + w) as usize] = s;
    put(&mut sites, 0, Site::Second);
    let mut n = 1i64;
    while initial_site(n, config.lambda, config.rho) >= -w {
        put(&mut sites, initial_site(n, config.lambda, config.rho), Site::First(n));
        n += 1;
    }
    let mut n = -1i64;
    while initial_site(n, config.lambda, config.rho) <= w {
        put(&mut sites, initial_site(n, config.lambda, config.rho), Site::First(n));
        n -= 1;
    }
    Ok(TasepState {
        config,
        lo: -w,
        sites,
        x: 0,
        n_steps: 0,
        left_swaps: 0,
        right_jumps: 0,
        time: 0.0,
        taint_left: -w,
        taint_right: w + 1,
        clocks: None,
    })
}

impl TasepState {
    /// Arbitrary initial data inside the window of `config`: first-class
    /// particles `(label, site)` and the second-class particle at `second`.
    pub fn from_configuration(config: TasepConfig, first: &[(i64, i64)], second: i64) -> Result<Self> {
        config.validate()?;
        let w = config.window_halfwidth;
        let mut sites = vec![Site::Hole; (2 * w + 1) as usize];
        let inside = |x: i64| (-w..=w).contains(&x);
        if !inside(second) {
            return Err(invalid("second-class particle outside the window"));
        }
        sites[(second + w) as usize] = Site::Second;
        for &(n, x) in first {
            if !inside(x) || sites[(x + w) as usize] != Site::Hole {
                return Err(invalid(format!("particle {n} at {x} is outside the window or on an occupied site")));
            }
            sites[(x + w) as usize] = Site::First(n);
        }
        let state = TasepState {
            config,
            lo: -w,
            sites,
            x: second,
            n_steps: 0,
            left_swaps: 0,
            right_jumps: 0,
            time: 0.0,
            taint_left: -w,
            taint_right: w + 1,
            clocks: None,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn config(&self) -> &TasepConfig {
        &self.config
    }

    pub fn site(&self, x: i64) -> Option<Site> {
        let k = x - self.lo;
        (k >= 0 && (k as usize) < self.sites.len()).then(|| self.sites[k as usize])
    }

    pub fn second_class_position(&self) -> i64 {
        self.x
    }

    pub fn n_steps(&self) -> i64 {
        self.n_steps
    }

    pub fn left_swaps(&self) -> i64 {
        self.left_swaps
    }

    pub fn right_jumps(&self) -> i64 {
        self.right_jumps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Positions of first-class particles keyed by label.
    pub fn particles(&self) -> Vec<(i64, i64)> {
        let mut v: Vec<(i64, i64)> = self
            .sites
            .iter()
            .enumerate()
            .filter_map(|(k, s)| match s {
                Site::First(n) => Some((*n, self.lo + k as i64)),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v
    }

    pub fn sample(&self) -> ShockSample {
        ShockSample::new(self.x, self.n_steps, self.time, self.config.lambda, self.config.rho)
    }

    /// Exclusion, a single second-class particle and label order.
    pub fn check_invariants(&self) -> Result<()> {
        let seconds = self.sites.iter().filter(|s| **s == Site::Second).count();
        if seconds != 1 || self.site(self.x) != Some(Site::Second) {
            return Err(Error::Invariant("second-class particle lost".into()));
        }
        let mut last: Option<i64> = None;
        for s in &self.sites {
            if let Site::First(n) = s {
                if let Some(m) = last {
                    if *n >= m {
                        return Err(Error::Invariant(format!("label order broken: {m} then {n}")));
                    }
                }
                last = Some(*n);
            }
        }
        Ok(())
    }

    fn idx(&self, x: i64) -> usize {
        (x - self.lo) as usize
    }

    /// Applies a ring of the clock at `x`.
    fn ring(&mut self, x: i64) {
        if x == self.taint_left {
            self.taint_left += 1;
        }
        if x == self.taint_right - 1 {
            self.taint_right -= 1;
        }
        let hi = self.lo + self.sites.len() as i64 - 1;
        if x >= hi {
            return;
        }
        let (a, b) = (self.idx(x), self.idx(x + 1));
        match (self.sites[a], self.sites[b]) {
            (Site::First(n), Site::Hole) => {
                self.sites[a] = Site::Hole;
                self.sites[b] = Site::First(n);
            }
            (Site::First(n), Site::Second) => {
                self.sites[a] = Site::Second;
                self.sites[b] = Site::First(n);
                self.x -= 1;
                self.n_steps += 1;
                self.left_swaps += 1;
            }
            (Site::Second, Site::Hole) => {
                self.sites[a] = Site::Hole;
                self.sites[b] = Site::Second;
                self.x += 1;
                self.n_steps += 1;
                self.right_jumps += 1;
            }
            _ => {}
        }
    }

    fn overflowed(&self) -> bool {
        self.x - 1 <= self.taint_left || self.x + 1 >= self.taint_right
    }
}

/// Advances `state` to time `t` with the Poisson site clocks of `seed`.
pub fn run_until(state: &mut TasepState, t: f64, seed: SeedSpec) -> Result<ShockSample> {
    if t > state.config.horizon {
        return Err(invalid(format!("time {t} exceeds the configured horizon {}", state.config.horizon)));
    }
    if t < state.time {
        return Err(invalid(format!("time {t} is before the current time {}", state.time)));
    }
    let w = state.config.window_halfwidth;
    match &state.clocks {
        None => state.clocks = Some(SiteClocks::new(seed, -w, w)),
        Some(c) if c.seed != seed => {
            return Err(invalid("a state must be advanced with a single clock seed"));
        }
        Some(_) => {}
    }
    loop {
        let clocks = state.clocks.as_mut().expect("initialized above");
        if clocks.peek().map_or(true, |s| s > t) {
            break;
        }
        let (_, x) = clocks.pop();
        state.ring(x);
        if state.overflowed() {
            return Err(Error::WindowOverflow(format!(
                "second-class particle at {} reached the influence of the window edge",
                state.x
            )));
        }
    }
    state.time = t;
    if cfg!(debug_assertions) {
        state.check_invariants()?;
    }
    Ok(state.sample())
}

/// Position of the single discrepancy between two basic-coupled systems that
/// differ only at the origin, driven by the site clocks of `seed`.
pub fn run_discrepancy(config: &TasepConfig, t: f64, seed: SeedSpec) -> Result<i64> {
    config.validate()?;
    if t > config.horizon {
        return Err(invalid(format!("time {t} exceeds the configured horizon {}", config.horizon)));
    }
    let w = config.window_halfwidth;
    let len = (2 * w + 1) as usize;
    let mut eta = vec![false; len];
    let mut n = 1i64;
    while initial_site(n, config.lambda, config.rho) >= -w {
        eta[(initial_site(n, config.lambda, config.rho) + w) as usize] = true;
        n += 1;
    }
    let mut n = -1i64;
    while initial_site(n, config.lambda, config.rho) <= w {
        eta[(initial_site(n, config.lambda, config.rho) + w) as usize] = true;
        n -= 1;
    }
    let mut eta2 = eta.clone();
    eta[w as usize] = true;
    eta2[w as usize] = false;

    let mut clocks = SiteClocks::new(seed, -w, w);
    let (mut tl, mut tr) = (-w, w + 1);
    let mut d = 0i64;
    let diff_at = |a: &[bool], b: &[bool], x: i64| a[(x + w) as usize] != b[(x + w) as usize];
    while clocks.peek().is_some_and(|s| s <= t) {
        let (_, x) = clocks.pop();
        if x == tl {
            tl += 1;
        }
        if x == tr - 1 {
            tr -= 1;
        }
        if x >= w {
            continue;
        }
        let (a, b) = ((x + w) as usize, (x + w + 1) as usize);
        let before = diff_at(&eta, &eta2, x) as i64 + diff_at(&eta, &eta2, x + 1) as i64;
        for sys in [&mut eta, &mut eta2] {
            if sys[a] && !sys[b] {
                sys[a] = false;
                sys[b] = true;
            }
        }
        let after = diff_at(&eta, &eta2, x) as i64 + diff_at(&eta, &eta2, x + 1) as i64;
        if after != before {
            return Err(Error::Invariant(format!("discrepancy count changed at site {x}")));
        }
        if diff_at(&eta, &eta2, x) {
            d = x;
        } else if diff_at(&eta, &eta2, x + 1) {
            d = x + 1;
        }
        if d - 1 <= tl || d + 1 >= tr {
            return Err(Error::WindowOverflow(format!("discrepancy at {d} reached the window edge influence")));
        }
    }
    let count = (0..len).filter(|&k| eta[k] != eta2[k]).count();
    if count != 1 {
        return Err(Error::Invariant(format!("{count} discrepancies instead of one")));
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Sched {
    cell_i: i64,
    version: u64,
}

/// TASEP whose waiting times are LPP weights.
///
/// Particle `j` jumping into site `e + 1` of the extended lattice consumes
/// `w(e + 1 + j, j)` once the jump is enabled. Without a second-class particle
/// the extended and physical lattices coincide. With one at `X`, carrying the
/// label `J` (the number of left swaps so far), every physical site `s >= X`
/// is shifted by one: the second-class particle stands for a hole at `X`
/// followed by particle `J` at `X + 1`. First-class labels run `J+1, J+2, ...`
/// to its left and `J-1, J-2, ...` to its right; a swap relabels the passed
/// particle to `J` and increments `J`.
#[derive(Clone, Debug)]
pub struct FieldTasep<'a> {
    field: &'a WeightField,
    k_min: i64,
    k_max: i64,
    pos: Vec<i64>,
    occ: HashMap<i64, i64>,
    second: Option<(i64, i64)>,
    sched: Vec<Option<Sched>>,
    heap: BinaryHeap<Reverse<(Time, u64, i64)>>,
    version: u64,
    time: f64,
    n_steps: i64,
    /// Cells with first coordinate `>= cell_limit` may depend on particles
    /// outside the simulated label range.
    cell_limit: i64,
    trajectory: Vec<(f64, i64)>,
}

impl<'a> FieldTasep<'a> {
    /// `initial` lists `(label, site)` for consecutive labels with decreasing
    /// sites. With `second_class = Some(X)` the labels must include `0` at `X`,
    /// which becomes the second-class particle.
    pub fn new(field: &'a WeightField, initial: &[(i64, i64)], second_class: Option<i64>) -> Result<Self> {
        let mut init = initial.to_vec();
        init.sort_unstable();
        if init.is_empty() {
            return Err(invalid("no particles"));
        }
        for w in init.windows(2) {
            if w[1].0 != w[0].0 + 1 || w[1].1 >= w[0].1 {
                return Err(invalid("labels must be consecutive with decreasing sites"));
            }
        }
        let k_min = init[0].0;
        let k_max = init[init.len() - 1].0;
        let second = match second_class {
            None => None,
            Some(x) => {
                if !init.contains(&(0, x)) {
                    return Err(invalid("the second-class particle must be label 0"));
                }
                Some((x, 0))
            }
        };
        let pos: Vec<i64> = init.iter().map(|p| p.1).collect();
        let occ = init.iter().map(|&(k, s)| (s, k)).collect();
        let mut me = FieldTasep {
            field,
            k_min,
            k_max,
            pos,
            occ,
            second,
            sched: vec![None; init.len()],
            heap: BinaryHeap::new(),
            version: 0,
            time: 0.0,
            n_steps: 0,
            cell_limit: i64::MAX,
            trajectory: Vec::new(),
        };
        if let Some((x, _)) = me.second {
            me.trajectory.push((0.0, x));
        }
        for k in k_min..=k_max {
            me.refresh(k)?;
        }
        Ok(me)
    }

    /// Declares the simulated particles a truncation of a larger system whose
    /// missing rows (labels below `k_min`) start in columns `>= limit`. Cells
    /// left of `limit` are unaffected by them. A particle whose next cell is
    /// not stays frozen; if that move belongs to the second-class particle
    /// it is a window overflow. Without a limit the particles form a finite
    /// system.
    pub fn set_cell_limit(&mut self, limit: i64) {
        self.cell_limit = limit;
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn position(&self, label: i64) -> Option<i64> {
        (label >= self.k_min && label <= self.k_max).then(|| self.pos[(label - self.k_min) as usize])
    }

    /// `(X, I, J)` with `I = X + J + 1`.
    pub fn second_class(&self) -> Option<(i64, i64, i64)> {
        self.second.map(|(x, j)| (x, x + j + 1, j))
    }

    pub fn n_steps(&self) -> i64 {
        self.n_steps
    }

    /// `(time, X)` after every move of the second-class particle.
    pub fn trajectory(&self) -> &[(f64, i64)] {
        &self.trajectory
    }

    fn ext_site(&self, label: i64, s: i64) -> i64 {
        match self.second {
            Some((x, j)) if s > x || (s == x && label == j) => s + 1,
            _ => s,
        }
    }

    /// `(enabled, cell_i)` of the jump of `label`.
    fn bond(&self, label: i64) -> (bool, i64) {
        let s = self.pos[(label - self.k_min) as usize];
        let cell_i = self.ext_site(label, s) + 1 + label;
        let ahead = self.occ.get(&(s + 1)).copied();
        let enabled = match (self.second, ahead) {
            (_, None) => true,
            (Some((_, j)), Some(a)) => a == j && label != j,
            (None, Some(_)) => false,
        };
        (enabled, cell_i)
    }

    fn refresh(&mut self, label: i64) -> Result<()> {
        if label < self.k_min || label > self.k_max {
            return Ok(());
        }
        let slot = (label - self.k_min) as usize;
        let (enabled, cell_i) = self.bond(label);
        match self.sched[slot] {
            Some(s) if enabled && s.cell_i == cell_i => {}
            _ if enabled => {
                let w = self.field.weight_at(cell_i, label)?;
                self.version += 1;
                self.sched[slot] = Some(Sched {
                    cell_i,
                    version: self.version,
                });
                self.heap.push(Reverse((Time(self.time + w), self.version, label)));
            }
            _ => self.sched[slot] = None,
        }
        Ok(())
    }

    /// Processes every jump with time `<= t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        while let Some(&Reverse((Time(ft), ver, label))) = self.heap.peek() {
            if ft > t {
                break;
            }
            self.heap.pop();
            let slot = (label - self.k_min) as usize;
            let Some(s) = self.sched[slot] else { continue };
            if s.version != ver {
                continue;
            }
            self.sched[slot] = None;
            if s.cell_i >= self.cell_limit {
                let involves_second = self.second.is_some_and(|(x, j)| label == j || self.pos[slot] + 1 == x);
                if involves_second {
                    return Err(Error::WindowOverflow(format!(
                        "cell ({}, {label}) depends on particles outside the simulated range",
                        s.cell_i
                    )));
                }
                // the particle is frozen; cells to its right are never needed by exact ones
                continue;
            }
            self.time = ft;
            self.fire(label)?;
        }
        if t > self.time {
            self.time = t;
        }
        Ok(())
    }

    fn fire(&mut self, label: i64) -> Result<()> {
        let slot = (label - self.k_min) as usize;
        let s = self.pos[slot];
        let mut touched = vec![label - 1, label, label + 1];
        match self.second {
            Some((x, j)) if label == j => {
                self.move_particle(label, s, s + 1);
                self.second = Some((x + 1, j));
                self.n_steps += 1;
                self.trajectory.push((self.time, x + 1));
            }
            Some((x, j)) if s + 1 == x => {
                // swap: nobody changes site, the labels' roles shift
                if label != j + 1 {
                    return Err(Error::Invariant(format!("particle {label} reached the second-class particle {j}")));
                }
                if label + 1 > self.k_max {
                    return Err(Error::WindowOverflow("no first-class particle left of the swap".into()));
                }
                self.second = Some((x - 1, label));
                self.n_steps += 1;
                self.trajectory.push((self.time, x - 1));
                touched.extend([j - 1, j, label + 1, label + 2]);
            }
            _ => self.move_particle(label, s, s + 1),
        }
        touched.sort_unstable();
        touched.dedup();
        for k in touched {
            self.refresh(k)?;
        }
        Ok(())
    }

    fn move_particle(&mut self, label: i64, from: i64, to: i64) {
        self.occ.remove(&from);
        self.occ.insert(to, label);
        self.pos[(label - self.k_min) as usize] = to;
    }
}

/// Outcome of a pathwise comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingReport {
    pub holds: bool,
    pub checked: usize,
    pub counterexample: Option<String>,
}

/// Checks `L(line -> (m,n)) <= t  <=>  x_n(t) >= m - n` for every cell of
/// `window` whose row is a simulated label and every `t` in `t_grid`, with
/// the TASEP driven by `field` and started from `initial` (`(label, site)`).
pub fn verify_lpp_coupling(field: &WeightField, initial: &[(i64, i64)], window: Rect, t_grid: &[f64]) -> Result<CouplingReport> {
    let mut report = CouplingReport {
        holds: true,
        checked: 0,
        counterexample: None,
    };
    if t_grid.is_empty() {
        return Ok(report);
    }
    let mut init = initial.to_vec();
    init.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    let line: Vec<Point> = init.iter().map(|&(k, s)| Point::new(s + k, k)).collect();
    let starts = StartSet::new(line.clone())?;
    let hull = Rect::hull(line.iter().copied().chain([
        Point::new(window.i_min, window.j_min),
        Point::new(window.i_max, window.j_max),
    ]))
    .expect("nonempty");
    let table = LppTable::compute(field, &starts, hull)?;
    let mut tasep = FieldTasep::new(field, initial, None)?;
    let (k_lo, k_hi) = (init[init.len() - 1].0, init[0].0);
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &t in &grid {
        tasep.advance_to(t)?;
        for n in window.j_min.max(k_lo)..=window.j_max.min(k_hi) {
            let x = tasep.position(n).expect("label in range");
            for m in window.i_min..=window.i_max {
                let lpp = table.outcome(Point::new(m, n)).reached_by(t);
                let particle = x >= m - n;
                report.checked += 1;
                if lpp != particle && report.holds {
                    report.holds = false;
                    report.counterexample = Some(format!(
                        "t={t}, (m,n)=({m},{n}): L<=t is {lpp} but x_n(t)={x} vs m-n={}",
                        m - n
                    ));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_sites() {
        assert_eq!(initial_site(1, 0.5, 0.5), -2);
        assert_eq!(initial_site(3, 0.5, 0.5), -6);
        assert_eq!(initial_site(-1, 0.5, 0.5), 2);
        assert_eq!(initial_site(-2, 0.5, 0.5), 4);
        assert_eq!(initial_site(1, 0.25, 0.75), -4);
        assert_eq!(initial_site(-1, 0.25, 0.75), 2);
        assert_eq!(initial_site(-3, 0.25, 0.75), 4);
        assert_eq!(initial_site(3, 0.2, 0.6), -15);
    }

    #[test]
    fn window_must_cover_light_cone() {
        let mut c = TasepConfig::new(0.25, 0.75, 100.0).unwrap();
        c.window_halfwidth = 100;
        assert!(init_shock_state(c).is_err());
    }

    #[test]
    fn initial_state_is_consistent() {
        let s = init_shock_state(TasepConfig::new(0.25, 0.75, 10.0).unwrap()).unwrap();
        s.check_invariants().unwrap();
        assert_eq!(s.site(0), Some(Site::Second));
        assert_eq!(s.site(-4), Some(Site::First(1)));
        assert_eq!(s.site(2), Some(Site::First(-1)));
    }
}
