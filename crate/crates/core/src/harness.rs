//! Replica orchestration, goodness-of-fit statistics and persistence.
//!
//! Replica `r` of an experiment draws everything from
//! `replica_seed(master_seed, r)`, so results depend on the configuration
//! alone and never on how replicas are scheduled across workers.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::interface::shock_sample_via_interface;
use crate::rng::{replica_seed, SeedSpec, STREAM_BULK, STREAM_CLOCKS, STREAM_RESAMPLE};
use crate::shock::{shock_constants, Observable};
use crate::tasep::{init_shock_state, run_until, ShockSample, TasepConfig};
use crate::tw::{limit_law_cdf, DistTable};

/// Version string written into every artifact.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// CSV header of a sample file.
pub const CSV_HEADER: [&str; 8] = ["replica", "t", "lambda", "rho", "x_t", "n_t", "x_rescaled", "n_rescaled"];

/// How a replica produces its shock sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Competition interface of the exponential LPP field.
    Interface,
    /// Event-driven TASEP with Poisson site clocks.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub lambda: f64,
    pub rho: f64,
    pub t: f64,
    pub replicas: u64,
    pub master_seed: u64,
    pub engine: Engine,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(id: impl Into<String>, lambda: f64, rho: f64, t: f64, replicas: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            id: id.into(),
            lambda,
            rho,
            t,
            replicas,
            master_seed,
            engine: Engine::Interface,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(invalid("replicas must be at least 1"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(invalid("time scale must be positive and finite"));
        }
        shock_constants(self.lambda, self.rho)?;
        Ok(())
    }
}

/// Samples of one experiment, ordered by replica index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub config: ExperimentConfig,
    pub samples: Vec<ShockSample>,
    /// Replicas that overflowed their first window and were rerun.
    pub reruns: u64,
    pub workers: usize,
    pub runtime_seconds: f64,
}

impl SampleSet {
    pub fn values(&self, which: Observable) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| match which {
                Observable::X => s.x_rescaled,
                Observable::N => s.n_rescaled,
            })
            .collect()
    }
}

/// One replica and the number of window enlargements it needed. Enlarging
/// keeps the seed: weights and clocks are keyed by lattice position, so a
/// larger window reproduces the same sample wherever the small one was exact.
pub fn run_replica(cfg: &ExperimentConfig, index: u64) -> Result<(ShockSample, u32)> {
    let master = replica_seed(cfg.master_seed, index);
    match cfg.engine {
        Engine::Interface => {
            let run = shock_sample_via_interface(cfg.lambda, cfg.rho, cfg.t, SeedSpec::new(master, STREAM_BULK))?;
            Ok((run.sample, run.enlargements))
        }
        Engine::Direct => {
            let seed = SeedSpec::new(master, STREAM_CLOCKS);
            let mut tc = TasepConfig::new(cfg.lambda, cfg.rho, cfg.t)?;
            let mut enlargements = 0;
            loop {
                let mut state = init_shock_state(tc)?;
                match run_until(&mut state, cfg.t, seed) {
                    Ok(s) => return Ok((s, enlargements)),
                    Err(Error::WindowOverflow(_)) => {
                        tc.window_halfwidth *= 2;
                        enlargements += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
}

/// Runs every replica of `cfg` on a pool of `workers` threads and merges the
/// results in replica order.
pub fn run_shock_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<SampleSet> {
    cfg.validate()?;
    if workers < 1 {
        return Err(invalid("workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let runs: Vec<(ShockSample, u32)> =
        pool.install(|| (0..cfg.replicas).into_par_iter().map(|r| run_replica(cfg, r)).collect::<Result<_>>())?;
    Ok(SampleSet {
        config: cfg.clone(),
        reruns: runs.iter().filter(|r| r.1 > 0).count() as u64,
        samples: runs.into_iter().map(|r| r.0).collect(),
        workers,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

fn check_sorted(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    if xs.iter().any(|x| x.is_nan()) || xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invariant("samples must be sorted and free of NaN".into()));
    }
    Ok(())
}

/// One-sample Kolmogorov-Smirnov distance of sorted `samples` from `cdf`,
/// evaluated on both sides of every jump of the empirical CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    check_sorted(samples)?;
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (k, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Two-sample Kolmogorov-Smirnov distance of sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sorted(a)?;
    check_sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Sorted copy with NaNs rejected.
pub fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Data("NaN sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub ks_statistic: f64,
    pub n_samples: usize,
    pub reference: String,
    pub threshold: f64,
    pub pass: bool,
}

impl KsReport {
    pub fn new(ks_statistic: f64, n_samples: usize, reference: impl Into<String>, threshold: f64) -> Self {
        KsReport {
            ks_statistic,
            n_samples,
            reference: reference.into(),
            threshold,
            pass: ks_statistic <= threshold,
        }
    }

    /// KS of unsorted `samples` against `cdf`.
    pub fn against(samples: &[f64], cdf: impl Fn(f64) -> f64, reference: impl Into<String>, threshold: f64) -> Result<Self> {
        let s = sorted(samples)?;
        Ok(KsReport::new(ks_statistic(&s, cdf)?, s.len(), reference, threshold))
    }
}

/// KS of the rescaled `X_t` or `N_t` of `set` against the limit law.
pub fn limit_law_report(set: &SampleSet, which: Observable, goe: &DistTable, threshold: f64) -> Result<KsReport> {
    let sc = shock_constants(set.config.lambda, set.config.rho)?;
    let law = limit_law_cdf(which, &sc, goe, None)?;
    let name = match which {
        Observable::X => "limit-law-X",
        Observable::N => "limit-law-N",
    };
    KsReport::against(&set.values(which), |s| law.cdf(s), name, threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and unbiased variance.
pub fn moments(xs: &[f64]) -> Result<Moments> {
    if xs.len() < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Moments { mean, variance })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn ls_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn percentile_interval(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
    (at(0.025), at(0.975))
}

fn check_scales(ts: impl Iterator<Item = f64> + Clone) -> Result<()> {
    let ts: Vec<f64> = ts.collect();
    if ts.len() < 3 {
        return Err(invalid("at least three scales are needed"));
    }
    if ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid("scales must be positive"));
    }
    if ts.iter().all(|&t| t == ts[0]) {
        return Err(invalid("scales must not all coincide"));
    }
    Ok(())
}

/// Least-squares slope of `log var` against `log t`, with a 95% residual
/// bootstrap interval from `resamples` draws of the resample stream.
pub fn scaling_exponent_fit(points: &[(f64, f64)], resamples: usize, seed: u64) -> Result<ScalingFit> {
    check_scales(points.iter().map(|p| p.0))?;
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::Data("variances must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = ls_line(&xs, &ys);
    let resid: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - intercept - slope * x).collect();
    let key = SeedSpec::new(seed, STREAM_RESAMPLE).key();
    let n = xs.len();
    let mut counter = 0u64;
    let boot: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            let yb: Vec<f64> = xs
                .iter()
                .map(|x| {
                    let k = ((key.uniform(counter) * n as f64) as usize).min(n - 1);
                    counter += 1;
                    intercept + slope * x + resid[k]
                })
                .collect();
            ls_line(&xs, &yb).0
        })
        .collect();
    let (ci_low, ci_high) = percentile_interval(boot);
    Ok(ScalingFit { slope, intercept, ci_low, ci_high })
}

/// Slope of `log var` against `log t` from raw samples at each scale; the
/// interval resamples replicas within every scale.
pub fn scaling_fit_from_samples(data: &[(f64, Vec<f64>)], resamples: usize, seed: u64) -> Result<ScalingFit> {
    check_scales(data.iter().map(|d| d.0))?;
    let vars = data
        .iter()
        .map(|(t, xs)| Ok((*t, moments(xs)?.variance)))
        .collect::<Result<Vec<_>>>()?;
    let point = scaling_exponent_fit(&vars, 1, seed)?;
    let key = SeedSpec::new(seed, STREAM_RESAMPLE).key();
    let xs: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let mut counter = 0u64;
    let mut boot = Vec::with_capacity(resamples);
    for _ in 0..resamples.max(1) {
        let mut ys = Vec::with_capacity(data.len());
        for (_, s) in data {
            let draw: Vec<f64> = (0..s.len())
                .map(|_| {
                    let k = ((key.uniform(counter) * s.len() as f64) as usize).min(s.len() - 1);
                    counter += 1;
                    s[k]
                })
                .collect();
            ys.push(moments(&draw)?.variance.max(f64::MIN_POSITIVE).ln());
        }
        boot.push(ls_line(&xs, &ys).0);
    }
    let (ci_low, ci_high) = percentile_interval(boot);
    Ok(ScalingFit {
        ci_low,
        ci_high,
        ..point
    })
}

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub replica: u64,
    pub t: f64,
    pub lambda: f64,
    pub rho: f64,
    pub x_t: i64,
    pub n_t: i64,
    pub x_rescaled: f64,
    pub n_rescaled: f64,
}

impl SampleRow {
    pub fn sample(&self) -> ShockSample {
        ShockSample {
            x_t: self.x_t,
            n_t: self.n_t,
            x_rescaled: self.x_rescaled,
            n_rescaled: self.n_rescaled,
        }
    }
}

pub fn rows(set: &SampleSet) -> Vec<SampleRow> {
    set.samples
        .iter()
        .enumerate()
        .map(|(r, s)| SampleRow {
            replica: r as u64,
            t: set.config.t,
            lambda: set.config.lambda,
            rho: set.config.rho,
            x_t: s.x_t,
            n_t: s.n_t,
            x_rescaled: s.x_rescaled,
            n_rescaled: s.n_rescaled,
        })
        .collect()
}

/// CSV bytes; floats use the shortest representation that round-trips.
pub fn samples_csv(rows: &[SampleRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let data = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(CSV_HEADER).map_err(data)?;
    for r in rows {
        w.serialize(r).map_err(data)?;
    }
    w.into_inner().map_err(|e| Error::Data(e.to_string()))
}

pub fn parse_samples_csv(bytes: &[u8]) -> Result<Vec<SampleRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| Error::Data(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Data(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::Data(e.to_string()))).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub code_version: String,
    pub config: ExperimentConfig,
    pub samples: usize,
    pub reruns: u64,
    pub x_moments: Option<Moments>,
    pub n_moments: Option<Moments>,
    pub ks: Vec<KsReport>,
    pub master_seed: u64,
    pub workers: usize,
    pub runtime_seconds: f64,
    pub samples_sha256: String,
    /// Environment overrides in effect, echoed for provenance.
    pub env: Vec<(String, String)>,
}

impl Summary {
    pub fn new(set: &SampleSet, ks: Vec<KsReport>, env: Vec<(String, String)>) -> Result<Self> {
        let csv = samples_csv(&rows(set))?;
        Ok(Summary {
            code_version: CODE_VERSION.into(),
            config: set.config.clone(),
            samples: set.samples.len(),
            reruns: set.reruns,
            x_moments: moments(&set.values(Observable::X)).ok(),
            n_moments: moments(&set.values(Observable::N)).ok(),
            ks,
            master_seed: set.config.master_seed,
            workers: set.workers,
            runtime_seconds: set.runtime_seconds,
            samples_sha256: sha256_hex(&csv),
            env,
        })
    }
}

/// File format of the sample output; summaries are always JSON.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleFormat {
    #[default]
    Csv,
    Json,
}

/// Paths written by [`persist`].
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub samples: PathBuf,
    pub summary: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| Error::Data(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Writes `<id>.csv` (or `<id>.samples.json`) and `<id>.summary.json` into
/// `dir`. A failed write removes whatever was already written.
pub fn persist(set: &SampleSet, summary: &Summary, dir: &Path, format: SampleFormat) -> Result<Artifacts> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = match format {
        SampleFormat::Csv => format!("{}.csv", set.config.id),
        SampleFormat::Json => format!("{}.samples.json", set.config.id),
    };
    let a = Artifacts {
        samples: dir.join(name),
        summary: dir.join(format!("{}.summary.json", set.config.id)),
    };
    let sample_bytes = match format {
        SampleFormat::Csv => samples_csv(&rows(set)),
        SampleFormat::Json => to_json(&rows(set)),
    };
    let res = sample_bytes
        .and_then(|b| write_file(&a.samples, &b))
        .and_then(|_| to_json(summary))
        .and_then(|b| write_file(&a.summary, &b));
    if let Err(e) = res {
        let _ = fs::remove_file(&a.samples);
        let _ = fs::remove_file(&a.summary);
        return Err(e);
    }
    Ok(a)
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRow>> {
    parse_samples_csv(&fs::read(path).map_err(io_err(path))?)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    serde_json::from_slice(&fs::read(path).map_err(io_err(path))?).map_err(|e| Error::Data(e.to_string()))
}
