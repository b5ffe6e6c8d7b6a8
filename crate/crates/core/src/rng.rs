//! Counter-based random sources.
//!
//! Every random number in the crate is a pure function of
//! `(master_seed, stream_tag, counter)`. Nothing carries sequential state, so
//! the same exponential weight can be looked up by the LPP solver, the
//! particle simulation and the stationary model without storing the field.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lpp::Rect;

/// Bulk LPP weights / TASEP waiting times.
pub const STREAM_BULK: u32 = 0;
/// Boundary p-weights of the stationary model.
pub const STREAM_P: u32 = 1;
/// Boundary q-weights of the stationary model.
pub const STREAM_Q: u32 = 2;
/// Poisson site clocks of the direct TASEP simulation.
pub const STREAM_CLOCKS: u32 = 3;
/// Replica seed derivation.
pub const STREAM_REPLICA: u32 = 4;
/// Bootstrap resampling and other harness-level draws.
pub const STREAM_RESAMPLE: u32 = 5;
/// Inverse-transform sampling from tabulated laws.
pub const STREAM_TABLE: u32 = 6;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for replica `index` of an experiment.
pub fn replica_seed(master_seed: u64, index: u64) -> u64 {
    SeedSpec::new(master_seed, STREAM_REPLICA).bits(index)
}

/// Packs a lattice cell into a 64-bit counter. Both coordinates must fit in
/// an `i32`; [`WeightField`] windows are validated against that.
#[inline]
pub fn cell_counter(i: i64, j: i64) -> u64 {
    ((i as i32 as u32 as u64) << 32) | (j as i32 as u32 as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_tag: u32,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_tag: u32) -> Self {
        SeedSpec {
            master_seed,
            stream_tag,
        }
    }

    pub fn with_stream(self, stream_tag: u32) -> Self {
        SeedSpec {
            stream_tag,
            ..self
        }
    }

    #[inline]
    pub fn key(self) -> StreamKey {
        let k1 = mix64(self.master_seed ^ mix64(u64::from(self.stream_tag) ^ 0x243F_6A88_85A3_08D3));
        StreamKey {
            k1,
            k2: mix64(k1 ^ 0x1319_8A2E_0370_7344),
        }
    }

    pub fn bits(self, counter: u64) -> u64 {
        self.key().bits(counter)
    }

    pub fn uniform(self, counter: u64) -> f64 {
        self.key().uniform(counter)
    }
}

/// Expanded key of a [`SeedSpec`]; cheap to copy into hot loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    k1: u64,
    k2: u64,
}

impl StreamKey {
    #[inline]
    pub fn bits(self, counter: u64) -> u64 {
        mix64(mix64(counter.wrapping_mul(GOLDEN).wrapping_add(self.k1)) ^ self.k2)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(self, counter: u64) -> f64 {
        (self.bits(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exp(1) variate; `u = 1` never occurs so the value is finite.
    #[inline]
    pub fn exp1(self, counter: u64) -> f64 {
        -(1.0 - self.uniform(counter)).ln()
    }
}

/// Inverse-CDF map `u -> -ln(1-u)/rate`.
pub fn exponential_from_uniform(u: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(invalid(format!("exponential rate must be positive, got {rate}")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(invalid(format!("uniform variate must lie in [0,1), got {u}")));
    }
    Ok(-(1.0 - u).ln() / rate)
}

pub fn sample_exponential(rate: f64, seed: SeedSpec, counter: u64) -> Result<f64> {
    exponential_from_uniform(seed.uniform(counter), rate)
}

/// Exponential rate of a weight as a function of its row (the particle label).
#[derive(Clone, Debug, PartialEq)]
pub enum RateFn {
    Constant(f64),
    /// `rates[j - j0]` for row `j`; rows outside the table use `default`.
    Rows { j0: i64, rates: Vec<f64>, default: f64 },
}

impl RateFn {
    #[inline]
    pub fn rate(&self, j: i64) -> f64 {
        match self {
            RateFn::Constant(r) => *r,
            RateFn::Rows { j0, rates, default } => {
                let k = j - j0;
                if k >= 0 && (k as usize) < rates.len() {
                    rates[k as usize]
                } else {
                    *default
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |r: f64| r > 0.0 && r.is_finite();
        let good = match self {
            RateFn::Constant(r) => ok(*r),
            RateFn::Rows { rates, default, .. } => ok(*default) && rates.iter().all(|&r| ok(r)),
        };
        if good {
            Ok(())
        } else {
            Err(invalid("exponential rates must be positive and finite"))
        }
    }
}

/// The i.i.d. exponential environment `omega_{i,j}` restricted to a window.
#[derive(Clone, Debug)]
pub struct WeightField {
    seed: SeedSpec,
    window: Rect,
    rates: RateFn,
    key: StreamKey,
}

const COORD_LIMIT: i64 = i32::MAX as i64;

impl WeightField {
    pub fn new(seed: SeedSpec, window: Rect, rates: RateFn) -> Result<Self> {
        rates.validate()?;
        if window.i_min > window.i_max || window.j_min > window.j_max {
            return Err(invalid("empty weight window"));
        }
        let lim = |v: i64| v.abs() < COORD_LIMIT;
        if !(lim(window.i_min) && lim(window.i_max) && lim(window.j_min) && lim(window.j_max)) {
            return Err(invalid("weight window exceeds the 32-bit coordinate range"));
        }
        Ok(WeightField {
            seed,
            window,
            rates,
            key: seed.key(),
        })
    }

    /// Unit-rate field on `window`.
    pub fn exp1(seed: SeedSpec, window: Rect) -> Result<Self> {
        Self::new(seed, window, RateFn::Constant(1.0))
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn rates(&self) -> &RateFn {
        &self.rates
    }

    /// Same randomness on a different window.
    pub fn with_window(&self, window: Rect) -> Result<Self> {
        Self::new(self.seed, window, self.rates.clone())
    }

    pub fn covers(&self, r: &Rect) -> bool {
        self.window.contains_rect(r)
    }

    pub fn weight_at(&self, i: i64, j: i64) -> Result<f64> {
        if !self.window.contains(i, j) {
            return Err(Error::OutOfWindow { i, j });
        }
        Ok(self.weight_unchecked(i, j))
    }

    /// Weight lookup without the window check; callers validate their region
    /// once with [`WeightField::covers`].
    #[inline]
    pub fn weight_unchecked(&self, i: i64, j: i64) -> f64 {
        let e = self.key.exp1(cell_counter(i, j));
        match self.rates {
            RateFn::Constant(r) if r == 1.0 => e,
            _ => e / self.rates.rate(j),
        }
    }
}
