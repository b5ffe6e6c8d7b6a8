//! Command-line entry point for the shock experiments, diagnostics and
//! Tracy-Widom tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use shocklab::acceptance::{self, exit_tail_regression, good_event_pass, good_event_scan, point_to_point_samples, stationarity_check, Plan};
use shocklab::diagnostics::{goe_marginal_cdf, one_point_samples, pearson};
use shocklab::harness::{ks_statistic, limit_law_report, persist, run_shock_experiment, sorted, Engine, ExperimentConfig, KsReport, SampleFormat, Summary};
use shocklab::shock::{shock_constants, Observable, Side};
use shocklab::stationary::coupling_trials;
use shocklab::tw::{limit_law_cdf, DistTable};
use shocklab::Error;

const OUT_ENV: &str = "SHOCKLAB_OUT_DIR";
const WORKERS_ENV: &str = "SHOCKLAB_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "shocklab", version, about = "TASEP shock fluctuations: simulation, LPP diagnostics and Tracy-Widom tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the shock constants for a density pair
    Constants(Common),
    /// Run the shock experiment and compare with the limit laws
    Simulate(SimulateArgs),
    /// One-point laws of the rescaled line-to-point LPP
    LppSample(LppArgs),
    /// Stationarity of the boundary-weighted LPP
    StationaryCheck(StationaryArgs),
    /// Exit-point tail profile and its regression
    ExitTails(StationaryArgs),
    /// Coupling inequalities between half-line and stationary LPP
    CouplingCheck(Common),
    /// Probability of the good event for a list of r
    GoodEvent(GoodEventArgs),
    /// Tabulate F_GUE or F_GOE
    TwTable(TwArgs),
    /// Tabulate the limit law of X or N
    LimitLaw(LimitLawArgs),
    /// Run the acceptance suite
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Density left of the origin
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    /// Density right of the origin
    #[arg(long, default_value_t = 0.75)]
    rho: f64,
    /// Time horizon
    #[arg(long, default_value_t = 1000.0)]
    t: f64,
    /// LPP scale parameter N
    #[arg(long, default_value_t = 500.0)]
    n: f64,
    /// Number of replicas
    #[arg(long, default_value_t = 4000)]
    replicas: u64,
    /// Master seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads
    #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
    workers: usize,
    /// Quadrature order of the Tracy-Widom tables
    #[arg(long, default_value_t = 64)]
    order: usize,
    /// Output directory
    #[arg(long, env = OUT_ENV, default_value = "out")]
    out: PathBuf,
    /// Sample file format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EngineArg {
    Interface,
    Direct,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Gue,
    Goe,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Which {
    X,
    N,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Sample generator
    #[arg(long, value_enum, default_value_t = EngineArg::Interface)]
    engine: EngineArg,
    /// KS threshold against the limit laws
    #[arg(long, default_value_t = 0.10)]
    ks_threshold: f64,
}

#[derive(Args, Debug)]
struct LppArgs {
    #[command(flatten)]
    common: Common,
    /// Point-to-point target (eta N, N) instead of the half-line laws
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct StationaryArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter of the boundary weights
    #[arg(long, default_value_t = 0.5)]
    varrho: f64,
    /// Density of the initial line
    #[arg(long, default_value_t = 0.5)]
    line: f64,
    /// Target shift C in units of N^{1/3}
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args, Debug)]
struct GoodEventArgs {
    #[command(flatten)]
    common: Common,
    /// Density shifts r in units of N^{-1/3}
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0])]
    r: Vec<f64>,
    /// Window C in units of N^{1/3}
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Args, Debug)]
struct TwArgs {
    #[command(flatten)]
    common: Common,
    /// Distribution to tabulate
    #[arg(long, value_enum, default_value_t = Kind::Goe)]
    kind: Kind,
}

#[derive(Args, Debug)]
struct LimitLawArgs {
    #[command(flatten)]
    common: Common,
    /// Observable
    #[arg(long, value_enum, default_value_t = Which::X)]
    observable: Which,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Reduced replica counts and scales, same thresholds
    #[arg(long)]
    quick: bool,
    /// Run only these criteria
    #[arg(long, value_delimiter = ',')]
    criterion: Vec<u8>,
    /// Worker threads
    #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
    workers: usize,
}

/// Exit status: 0 pass, 1 check failure, 2 usage error, 3 internal error.
#[derive(Debug)]
enum Failure {
    Check,
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Range(_) | Error::Accuracy(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

type Run = Result<(), Failure>;

fn env_echo() -> Vec<(String, String)> {
    [OUT_ENV, WORKERS_ENV]
        .iter()
        .filter_map(|k| std::env::var(k).ok().map(|v| (k.to_string(), v)))
        .collect()
}

fn echo(command: &str, config: Value) {
    let env: serde_json::Map<String, Value> = env_echo().into_iter().map(|(k, v)| (k, Value::String(v))).collect();
    eprintln!("{}", json!({ "command": command, "config": config, "env": env }));
}

fn common_json(c: &Common) -> Value {
    json!({
        "lambda": c.lambda, "rho": c.rho, "t": c.t, "n": c.n, "replicas": c.replicas, "seed": c.seed,
        "workers": c.workers, "order": c.order, "out": c.out, "format": format!("{:?}", c.format).to_lowercase(),
    })
}

fn replicas(c: &Common) -> Result<usize, Failure> {
    if c.replicas < 1 {
        return Err(Failure::Usage("replicas must be at least 1".into()));
    }
    if c.workers < 1 {
        return Err(Failure::Usage("workers must be at least 1".into()));
    }
    Ok(c.replicas as usize)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values always serialise"));
}

/// Writes a summary JSON next to the samples and removes both on failure.
fn write_artifacts(dir: &Path, name: &str, samples: Option<(&str, String)>, summary: &Value) -> Run {
    let io = |p: &Path, e: std::io::Error| Failure::Internal(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let mut files = Vec::new();
    if let Some((ext, body)) = samples {
        files.push((dir.join(format!("{name}.{ext}")), body));
    }
    files.push((dir.join(format!("{name}.summary.json")), serde_json::to_string_pretty(summary).expect("JSON") + "\n"));
    for (p, body) in files {
        if let Err(e) = std::fs::write(&p, body) {
            for w in &written {
                let _ = std::fs::remove_file(w);
            }
            return Err(io(&p, e));
        }
        written.push(p);
    }
    Ok(())
}

fn verdict(pass: bool) -> Run {
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn constants(c: &Common) -> Run {
    echo("constants", common_json(c));
    let sc = shock_constants(c.lambda, c.rho)?;
    print_json(&json!(sc));
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Run {
    let c = &a.common;
    replicas(c)?;
    let mut cfg = ExperimentConfig::new(format!("shock-{}-{}-{}", c.lambda, c.rho, c.t), c.lambda, c.rho, c.t, c.replicas, c.seed);
    cfg.engine = match a.engine {
        EngineArg::Interface => Engine::Interface,
        EngineArg::Direct => Engine::Direct,
    };
    cfg.out_dir = Some(c.out.clone());
    let mut cfg_json = common_json(c);
    cfg_json["engine"] = json!(cfg.engine);
    cfg_json["ks_threshold"] = json!(a.ks_threshold);
    echo("simulate", cfg_json);
    cfg.validate()?;
    let set = run_shock_experiment(&cfg, c.workers)?;
    let goe = DistTable::default_goe(c.order)?;
    let ks = if set.samples.len() >= 2 {
        vec![
            limit_law_report(&set, Observable::X, &goe, a.ks_threshold)?,
            limit_law_report(&set, Observable::N, &goe, a.ks_threshold)?,
        ]
    } else {
        vec![]
    };
    let summary = Summary::new(&set, ks.clone(), env_echo())?;
    let format = match c.format {
        Format::Csv => SampleFormat::Csv,
        Format::Json => SampleFormat::Json,
    };
    let art = persist(&set, &summary, &c.out, format)?;
    print_json(&json!({ "summary": summary, "samples_file": art.samples, "summary_file": art.summary }));
    verdict(ks.iter().all(|k| k.pass))
}

fn lpp_sample(a: &LppArgs) -> Run {
    let c = &a.common;
    let reps = replicas(c)?;
    let mut cfg_json = common_json(c);
    cfg_json["eta"] = json!(a.eta);
    echo("lpp-sample", cfg_json.clone());
    let p = pool(c.workers)?;
    let (csv, reports, extra) = match a.eta {
        Some(eta) => {
            if c.n < 1.0 {
                return Err(Failure::Usage("n must be at least 1".into()));
            }
            let v = p.install(|| point_to_point_samples(c.n as i64, eta, reps, c.seed))?;
            let gue = DistTable::default_gue(c.order)?;
            let ks = KsReport::against(&v, |s| gue.cdf(s), "gue", 0.05)?;
            let csv: String = std::iter::once("replica,value".to_string())
                .chain(v.iter().enumerate().map(|(r, x)| format!("{r},{x}")))
                .collect::<Vec<_>>()
                .join("\n");
            (csv, vec![ks], json!({}))
        }
        None => {
            let sc = shock_constants(c.lambda, c.rho)?;
            let v = p.install(|| one_point_samples(&sc, c.n, reps, c.seed))?;
            let goe = DistTable::default_goe(c.order)?;
            let (xs, ys): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
            let kl = KsReport::new(ks_statistic(&sorted(&xs)?, |s| goe_marginal_cdf(&goe, sc.sigma(Side::Lambda), s))?, reps, "goe-lambda", 0.05);
            let kr = KsReport::new(ks_statistic(&sorted(&ys)?, |s| goe_marginal_cdf(&goe, sc.sigma(Side::Rho), s))?, reps, "goe-rho", 0.05);
            let csv: String = std::iter::once("replica,chi_lambda,chi_rho".to_string())
                .chain(v.iter().enumerate().map(|(r, (a, b))| format!("{r},{a},{b}")))
                .collect::<Vec<_>>()
                .join("\n");
            (csv, vec![kl, kr], json!({ "correlation": pearson(&xs, &ys) }))
        }
    };
    let pass = reports.iter().all(|k| k.pass) && extra.get("correlation").and_then(Value::as_f64).map_or(true, |r| r.abs() <= 0.05);
    let summary = json!({ "config": cfg_json, "ks": reports, "diagnostics": extra, "env": env_echo(), "pass": pass });
    write_artifacts(&c.out, "lpp-sample", Some(sample_body(c.format, &csv)), &summary)?;
    print_json(&summary);
    verdict(pass)
}

/// CSV text, or the same rows as JSON objects.
fn sample_body(format: Format, csv: &str) -> (&'static str, String) {
    match format {
        Format::Csv => ("csv", format!("{csv}\n")),
        Format::Json => {
            let mut lines = csv.lines();
            let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
            let rows: Vec<Value> = lines
                .map(|l| {
                    let obj: serde_json::Map<String, Value> = header
                        .iter()
                        .zip(l.split(','))
                        .map(|(h, v)| (h.to_string(), v.parse::<f64>().map_or(json!(v), |x| json!(x))))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            ("samples.json", serde_json::to_string_pretty(&rows).expect("JSON") + "\n")
        }
    }
}

fn stationary_json(a: &StationaryArgs) -> Value {
    let mut v = common_json(&a.common);
    v["varrho"] = json!(a.varrho);
    v["line"] = json!(a.line);
    v["c"] = json!(a.c);
    v
}

fn stationary(a: &StationaryArgs) -> Run {
    let c = &a.common;
    let reps = replicas(c)?;
    let cfg = stationary_json(a);
    echo("stationary-check", cfg.clone());
    let r = pool(c.workers)?.install(|| stationarity_check(c.n, a.line, a.varrho, reps, c.seed))?;
    let summary = json!({ "config": cfg, "report": r, "env": env_echo(), "pass": r.pass() });
    write_artifacts(&c.out, "stationary-check", None, &summary)?;
    print_json(&summary);
    verdict(r.pass())
}

fn exit_tails(a: &StationaryArgs) -> Run {
    let c = &a.common;
    let reps = replicas(c)?;
    let cfg = stationary_json(a);
    echo("exit-tails", cfg.clone());
    let r = exit_tail_regression(c.n, a.varrho, a.line, a.c, reps, c.seed)?;
    let csv: String = std::iter::once("m,probability,truncated".to_string())
        .chain(r.points.iter().map(|p| format!("{},{},{}", p.m, p.probability, p.truncated)))
        .collect::<Vec<_>>()
        .join("\n");
    let summary = json!({ "config": cfg, "regression": r, "env": env_echo(), "pass": r.pass() });
    write_artifacts(&c.out, "exit-tails", Some(sample_body(c.format, &csv)), &summary)?;
    print_json(&summary);
    verdict(r.pass())
}

fn coupling(c: &Common) -> Run {
    let trials = replicas(c)?;
    echo("coupling-check", common_json(c));
    let sc = shock_constants(c.lambda, c.rho)?;
    let cn = c.n.cbrt();
    let mut runs = Vec::new();
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let varrho = sc.lambda + sign * c.n.powf(-1.0 / 3.0);
        runs.push(json!({ "varrho": varrho, "summary": coupling_trials(&sc, c.n, varrho, cn, 2.0 * cn, trials, c.seed + k as u64)? }));
    }
    let violations: u64 = runs.iter().filter_map(|r| r["summary"]["violations"].as_u64()).sum();
    let summary = json!({ "config": common_json(c), "runs": runs, "env": env_echo(), "pass": violations == 0 });
    write_artifacts(&c.out, "coupling-check", None, &summary)?;
    print_json(&summary);
    verdict(violations == 0)
}

fn good_event(a: &GoodEventArgs) -> Run {
    let c = &a.common;
    let reps = replicas(c)?;
    let mut cfg = common_json(c);
    cfg["r"] = json!(a.r);
    cfg["c"] = json!(a.c);
    echo("good-event", cfg.clone());
    let sc = shock_constants(c.lambda, c.rho)?;
    let scan = good_event_scan(&sc, c.n, &a.r, a.c, reps, c.seed)?;
    let pass = good_event_pass(&scan, 0.05);
    let entries: Vec<Value> = a
        .r
        .iter()
        .zip(&scan)
        .map(|(r, g)| match g {
            Ok(g) => json!({ "r": r, "report": g }),
            Err(msg) => json!({ "r": r, "error": msg }),
        })
        .collect();
    let summary = json!({ "config": cfg, "scan": entries, "env": env_echo(), "pass": pass });
    write_artifacts(&c.out, "good-event", None, &summary)?;
    print_json(&summary);
    verdict(pass)
}

fn table_summary(t: &DistTable) -> Value {
    json!({ "meta": t.meta(), "points": t.s_grid().len(), "mean": t.mean(), "variance": t.variance(), "mass": t.density_mass() })
}

fn tw_table(a: &TwArgs) -> Run {
    let c = &a.common;
    let mut cfg = common_json(c);
    cfg["kind"] = json!(format!("{:?}", a.kind).to_lowercase());
    echo("tw-table", cfg.clone());
    let t = match a.kind {
        Kind::Gue => DistTable::default_gue(c.order)?,
        Kind::Goe => DistTable::default_goe(c.order)?,
    };
    let name = format!("tw-{}-{}", format!("{:?}", a.kind).to_lowercase(), c.order);
    let summary = json!({ "config": cfg, "table": table_summary(&t), "env": env_echo() });
    write_artifacts(&c.out, &name, Some(sample_body(c.format, t.to_csv().trim_end())), &summary)?;
    print_json(&summary);
    Ok(())
}

fn limit_law(a: &LimitLawArgs) -> Run {
    let c = &a.common;
    let mut cfg = common_json(c);
    cfg["observable"] = json!(format!("{:?}", a.observable).to_lowercase());
    echo("limit-law", cfg.clone());
    let sc = shock_constants(c.lambda, c.rho)?;
    let which = match a.observable {
        Which::X => Observable::X,
        Which::N => Observable::N,
    };
    let goe = DistTable::default_goe(c.order)?;
    let t = limit_law_cdf(which, &sc, &goe, None)?;
    let name = format!("limit-law-{}", format!("{:?}", a.observable).to_lowercase());
    let summary = json!({ "config": cfg, "table": table_summary(&t), "env": env_echo() });
    write_artifacts(&c.out, &name, Some(sample_body(c.format, t.to_csv().trim_end())), &summary)?;
    print_json(&summary);
    Ok(())
}

fn verify(a: &VerifyArgs) -> Run {
    let plan = if a.quick { Plan::Quick } else { Plan::Full };
    let ids: Vec<u8> = if a.criterion.is_empty() {
        acceptance::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        a.criterion.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !acceptance::CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Failure::Usage(format!("no criterion {bad}")));
    }
    if a.workers < 1 {
        return Err(Failure::Usage("workers must be at least 1".into()));
    }
    echo("verify", json!({ "quick": a.quick, "criteria": ids, "workers": a.workers }));
    let mut outcomes = Vec::new();
    for id in ids {
        let o = acceptance::run(id, plan, a.workers);
        println!("{o}");
        outcomes.push(o);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if outcomes.iter().any(|o| o.invariant_violation) {
        return Err(Failure::Internal("invariant violation during verification".into()));
    }
    verdict(passed == outcomes.len())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = match &cli.command {
        Command::Constants(c) => constants(c),
        Command::Simulate(a) => simulate(a),
        Command::LppSample(a) => lpp_sample(a),
        Command::StationaryCheck(a) => stationary(a),
        Command::ExitTails(a) => exit_tails(a),
        Command::CouplingCheck(c) => coupling(c),
        Command::GoodEvent(a) => good_event(a),
        Command::TwTable(a) => tw_table(a),
        Command::LimitLaw(a) => limit_law(a),
        Command::Verify(a) => verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
