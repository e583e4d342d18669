//! The `noma` command line.
//!
//! Every subcommand prints a table (CSV by default) to stdout or `--out`;
//! with `--out` a `<out>.manifest.json` sidecar records the parameters,
//! tool version, seed, timestamp and a SHA-256 of the data file.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or I/O error,
//! 3 numerical failure.

pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{closed_form_probabilities, optimal_a2_special, quadrature_probabilities, QuadratureOptions};
use crate::error::Error;
use crate::montecarlo::{estimate_average_rates, estimate_event_probs, McConfig, GENERATOR_ID};
use crate::order_stats::PairingConfig;
use crate::regions::{
    noma_arc_samples, noma_rate_pair, region_boundary_samples, tdma_rate_pair, ChannelPair, PowerSplit, RegionKind,
    SegmentBreakpoints, TimeSplit,
};
use crate::EventProbabilities;
use output::{emit, Cell, Format, RunManifest, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Caps the worker threads used by simulation and quadrature.
pub const THREADS_ENV: &str = "NOMA_THREADS";

/// User pairs `(m, n)` used for the per-event bar chart when none are given.
pub const DEFAULT_PAIRS: [(usize, usize); 4] = [(1, 2), (4, 5), (2, 7), (1, 10)];

#[derive(Debug, Parser)]
#[command(name = "noma", version, about = "NOMA vs. TDMA rate regions and event probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity, NOMA and TDMA boundaries for one channel pair.
    Regions(RegionsArgs),
    /// Probabilities of the four events for one or more user pairs.
    Events(EventsArgs),
    /// P(E2) as the strong user's index n sweeps m+1..=M.
    SweepN(SweepArgs),
    /// Average per-user rates of NOMA and TDMA against SNR.
    Rates(RatesArgs),
    /// Run the built-in consistency checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegionsArgs {
    /// Effective SNR of the weaker user (linear).
    #[arg(long)]
    pub x: f64,
    /// Effective SNR of the stronger user (linear).
    #[arg(long)]
    pub y: f64,
    /// Largest strong-user power fraction drawn on the NOMA arc.
    #[arg(long, default_value_t = 0.5)]
    pub a2_max: f64,
    /// Points per boundary.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Also emit the NOMA point N and the crossings B, C, D for this split.
    #[arg(long)]
    pub a2: Option<f64>,
    /// Also emit the TDMA point T for this time split.
    #[arg(long)]
    pub b2: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

/// How the strong user's power fraction is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum A2Mode {
    Fixed(f64),
    InvSqrtRho,
    Special,
}

impl A2Mode {
    pub fn resolve(&self, rho: f64) -> f64 {
        match *self {
            A2Mode::Fixed(v) => v,
            A2Mode::InvSqrtRho => 1.0 / rho.sqrt(),
            A2Mode::Special => optimal_a2_special(rho),
        }
    }
}

impl FromStr for A2Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inv_sqrt_rho" => Ok(A2Mode::InvSqrtRho),
            "special" => Ok(A2Mode::Special),
            _ => match s.strip_prefix("fixed:") {
                Some(v) => v
                    .parse::<f64>()
                    .map(A2Mode::Fixed)
                    .map_err(|e| format!("bad fixed a2 value {v:?}: {e}")),
                None => Err(format!("expected fixed:<value>, inv_sqrt_rho or special, got {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Closed,
    Quadrature,
    Mc,
    All,
}

impl MethodArg {
    fn expand(self) -> Vec<MethodArg> {
        match self {
            MethodArg::All => vec![MethodArg::Closed, MethodArg::Quadrature, MethodArg::Mc],
            m => vec![m],
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Independent random-stream groups; results do not depend on it.
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EventsArgs {
    /// Total number of users.
    #[arg(long = "M", default_value_t = 10)]
    pub users: usize,
    /// Weak user's order index; with --n selects one pair, otherwise a default set of pairs is used.
    #[arg(long = "m", requires = "strong")]
    pub weak: Option<usize>,
    /// Strong user's order index.
    #[arg(long = "n", requires = "weak")]
    pub strong: Option<usize>,
    #[arg(long, default_value_t = 25.0)]
    pub rho_db: f64,
    /// fixed:<value>, inv_sqrt_rho or special.
    #[arg(long, default_value = "inv_sqrt_rho")]
    pub a2_mode: A2Mode,
    #[arg(long, default_value_t = 0.5)]
    pub b2: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    /// Mass tolerance of the 2-D quadrature.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long = "M", default_value_t = 10)]
    pub users: usize,
    #[arg(long = "m", default_value_t = 1)]
    pub weak: usize,
    #[arg(long, default_value_t = 25.0)]
    pub rho_db: f64,
    #[arg(long, default_value = "inv_sqrt_rho")]
    pub a2_mode: A2Mode,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatesArgs {
    #[arg(long = "M", default_value_t = 10)]
    pub users: usize,
    #[arg(long = "m", default_value_t = 1)]
    pub weak: usize,
    #[arg(long = "n", default_value_t = 10)]
    pub strong: usize,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20,25,30,35,40,45,50,55")]
    pub rho_db: Vec<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Propositions,
    Regions,
    Orderstats,
    Probabilities,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Trials for the Monte Carlo legs of the probability grid.
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

/// Converts dB to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(Error),
    Validation,
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence(_) | Error::Inconsistent(_) => Failure::Numeric(e),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
        Err(Failure::Validation) => EXIT_VALIDATION,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // fails only if a pool already exists, which is fine
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Regions(args) => cmd_regions(&args),
        Command::Events(args) => cmd_events(&args),
        Command::SweepN(args) => cmd_sweep_n(&args),
        Command::Rates(args) => cmd_rates(&args),
        Command::Validate(args) => cmd_validate(&args),
    }
}

fn params<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

pub fn regions_table(args: &RegionsArgs) -> crate::Result<Table> {
    let ch = ChannelPair::new(args.x, args.y)?;
    let mut table = Table::new(&["region", "r2", "r1"]);
    for kind in RegionKind::ALL {
        let pts = match kind {
            RegionKind::Noma => noma_arc_samples(&ch, args.a2_max, args.points)?,
            _ => region_boundary_samples(kind, &ch, args.points)?,
        };
        for p in pts {
            table.push(vec![kind.name().into(), p.r2.into(), p.r1.into()]);
        }
    }
    if let Some(a2) = args.a2 {
        let split = PowerSplit::noma(a2)?;
        let n = noma_rate_pair(&ch, &split)?;
        table.push(vec!["point_N".into(), n.r2.into(), n.r1.into()]);
        let bp = SegmentBreakpoints::new(&ch, &split)?;
        for (name, p) in ["point_B", "point_C", "point_D"].into_iter().zip(bp.points(&ch)) {
            table.push(vec![name.into(), p.r2.into(), p.r1.into()]);
        }
    }
    if let Some(b2) = args.b2 {
        let t = tdma_rate_pair(&ch, &TimeSplit::new(b2)?);
        table.push(vec!["point_T".into(), t.r2.into(), t.r1.into()]);
    }
    Ok(table)
}

fn cmd_regions(args: &RegionsArgs) -> Result<(), Failure> {
    let table = regions_table(args)?;
    let manifest = RunManifest::new("regions", params(args), None, None);
    Ok(emit(&table, args.output.format, args.output.out.as_deref(), manifest)?)
}

fn probability_row(m: usize, n: usize, probs: &EventProbabilities) -> Vec<Cell> {
    let mut row: Vec<Cell> = vec![m.into(), n.into(), probs.method.name().into()];
    row.extend(probs.p.iter().map(|p| Cell::from(*p)));
    match probs.stderr {
        Some(se) => row.extend(se.iter().map(|s| Cell::from(*s))),
        None => row.extend(std::iter::repeat(Cell::Empty).take(4)),
    }
    row
}

fn evaluate(
    method: MethodArg,
    cfg: &PairingConfig,
    a2: f64,
    b2: f64,
    tol: f64,
    sim: &SimArgs,
) -> Result<EventProbabilities, Failure> {
    Ok(match method {
        MethodArg::Closed => {
            if b2 != 0.5 {
                return Err(Failure::Usage("closed forms exist only for b2 = 0.5".into()));
            }
            closed_form_probabilities(cfg, a2, crate::analytic::DEFAULT_QUAD_TOL)?
        }
        MethodArg::Quadrature => quadrature_probabilities(cfg, a2, b2, &QuadratureOptions::with_tol(tol))?.0,
        MethodArg::Mc => estimate_event_probs(cfg, a2, b2, &McConfig::new(sim.trials, sim.seed, sim.shards)?)?,
        MethodArg::All => unreachable!("expanded by the caller"),
    })
}

/// Under `--method all`, a closed form that refuses to evaluate (too much
/// cancellation at large `M`) is skipped with a note instead of failing the run.
fn evaluate_or_skip(
    requested: MethodArg,
    method: MethodArg,
    cfg: &PairingConfig,
    a2: f64,
    b2: f64,
    tol: f64,
    sim: &SimArgs,
) -> Result<Option<EventProbabilities>, Failure> {
    match evaluate(method, cfg, a2, b2, tol, sim) {
        Err(Failure::Numeric(Error::Inconsistent(msg))) if requested == MethodArg::All && method == MethodArg::Closed => {
            eprintln!(
                "note: skipping closed forms for M={}, m={}, n={}: {msg}",
                cfg.users(),
                cfg.weak(),
                cfg.strong()
            );
            Ok(None)
        }
        other => other.map(Some),
    }
}

fn methods_for(method: MethodArg, b2: f64) -> Vec<MethodArg> {
    let mut methods = method.expand();
    if method == MethodArg::All && b2 != 0.5 {
        eprintln!("note: skipping closed forms, which need b2 = 0.5");
        methods.retain(|m| *m != MethodArg::Closed);
    }
    methods
}

pub fn events_table(args: &EventsArgs) -> Result<Table, FailureReport> {
    let rho = db_to_linear(args.rho_db);
    let a2 = args.a2_mode.resolve(rho);
    let pairs = match (args.weak, args.strong) {
        (Some(m), Some(n)) => vec![(m, n)],
        _ => DEFAULT_PAIRS.to_vec(),
    };
    let mut table = Table::new(&[
        "m", "n", "method", "p_e1", "p_e2", "p_e3", "p_e4", "stderr_e1", "stderr_e2", "stderr_e3", "stderr_e4",
    ]);
    for (m, n) in pairs {
        let cfg = PairingConfig::new(args.users, m, n, rho).map_err(Failure::from)?;
        for method in methods_for(args.method, args.b2) {
            if let Some(probs) = evaluate_or_skip(args.method, method, &cfg, a2, args.b2, args.tol, &args.sim)? {
                table.push(probability_row(m, n, &probs));
            }
        }
    }
    Ok(table)
}

fn cmd_events(args: &EventsArgs) -> Result<(), Failure> {
    let table = events_table(args).map_err(|r| r.0)?;
    let manifest = RunManifest::new("events", params(args), Some(args.sim.seed), Some(GENERATOR_ID));
    Ok(emit(&table, args.output.format, args.output.out.as_deref(), manifest)?)
}

pub fn sweep_table(args: &SweepArgs) -> Result<Table, FailureReport> {
    let rho = db_to_linear(args.rho_db);
    let a2 = args.a2_mode.resolve(rho);
    if args.weak >= args.users {
        return Err(Failure::Usage(format!("need m < M, got m={} and M={}", args.weak, args.users)).into());
    }
    let mut table = Table::new(&["n", "method", "p_e2", "stderr_e2"]);
    for method in methods_for(args.method, 0.5) {
        let mut previous: Option<(f64, f64)> = None;
        for n in args.weak + 1..=args.users {
            let cfg = PairingConfig::new(args.users, args.weak, n, rho).map_err(Failure::from)?;
            let Some(probs) = evaluate_or_skip(args.method, method, &cfg, a2, 0.5, args.tol, &args.sim)? else {
                continue;
            };
            let p2 = probs.p[1];
            let se = probs.stderr.map(|s| s[1]);
            if let Some((prev, prev_se)) = previous {
                let slack = 3.0 * (se.unwrap_or(0.0).powi(2) + prev_se.powi(2)).sqrt() + 1e-9;
                if p2 + slack < prev {
                    eprintln!("warning: {} P(E2) decreases from {prev} to {p2} at n={n}", probs.method.name());
                }
            }
            previous = Some((p2, se.unwrap_or(0.0)));
            table.push(vec![n.into(), probs.method.name().into(), p2.into(), se.into()]);
        }
    }
    Ok(table)
}

fn cmd_sweep_n(args: &SweepArgs) -> Result<(), Failure> {
    let table = sweep_table(args).map_err(|r| r.0)?;
    let manifest = RunManifest::new("sweep-n", params(args), Some(args.sim.seed), Some(GENERATOR_ID));
    Ok(emit(&table, args.output.format, args.output.out.as_deref(), manifest)?)
}

pub fn rates_table(args: &RatesArgs) -> Result<Table, FailureReport> {
    if args.rho_db.is_empty() {
        return Err(Failure::Usage("need at least one SNR point".into()).into());
    }
    let mc = McConfig::new(args.sim.trials, args.sim.seed, args.sim.shards).map_err(Failure::from)?;
    let mut table = Table::new(&[
        "rho_db",
        "r1_noma",
        "r2_noma",
        "r1_tdma",
        "r2_tdma",
        "stderr_r1_noma",
        "stderr_r2_noma",
        "stderr_r1_tdma",
        "stderr_r2_tdma",
    ]);
    for &db in &args.rho_db {
        let rho = db_to_linear(db);
        let cfg = PairingConfig::new(args.users, args.weak, args.strong, rho).map_err(Failure::from)?;
        let avg = estimate_average_rates(&cfg, optimal_a2_special(rho), 0.5, &mc).map_err(Failure::from)?;
        let mut row: Vec<Cell> = vec![db.into(), avg.r1_noma.into(), avg.r2_noma.into(), avg.r1_tdma.into(), avg.r2_tdma.into()];
        row.extend(avg.stderr.iter().map(|s| Cell::from(*s)));
        table.push(row);
    }
    Ok(table)
}

fn cmd_rates(args: &RatesArgs) -> Result<(), Failure> {
    let table = rates_table(args).map_err(|r| r.0)?;
    let manifest = RunManifest::new("rates", params(args), Some(args.sim.seed), Some(GENERATOR_ID));
    Ok(emit(&table, args.output.format, args.output.out.as_deref(), manifest)?)
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let checks = validate::run_suite(args.suite, args.seed, args.trials);
    let mut table = Table::new(&["suite", "check", "status", "detail"]);
    let mut failed = 0;
    for c in &checks {
        eprintln!("[{}] {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail);
        failed += usize::from(!c.passed);
        table.push(vec![c.suite.into(), c.name.clone().into(), c.passed.into(), c.detail.clone().into()]);
    }
    eprintln!("{} checks, {} failed", checks.len(), failed);
    let manifest = RunManifest::new("validate", params(args), Some(args.seed), Some(GENERATOR_ID));
    emit(&table, args.output.format, args.output.out.as_deref(), manifest)?;
    if failed > 0 {
        Err(Failure::Validation)
    } else {
        Ok(())
    }
}

/// Opaque error from the table builders, mapped to an exit code by [`run`].
#[derive(Debug)]
pub struct FailureReport(Failure);

impl From<Failure> for FailureReport {
    fn from(f: Failure) -> Self {
        FailureReport(f)
    }
}

impl std::fmt::Display for FailureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.0 {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Numeric(e) => write!(f, "{e}"),
            Failure::Validation => write!(f, "validation failed"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FailureReport {}
