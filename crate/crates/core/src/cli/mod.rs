//! `coherdist` command line: `compute`, `sweep`, `catalysis`, `verify`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 solver failure.

pub mod grid;
pub mod input;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use serde_json::json;

use crate::acceptance::{self, Suite};
use crate::analytic::{
    dio_threshold, mio_pure_lower_bound, normalize_amplitudes, p_qubit_target, p_sio_pure,
    DEFAULT_ZERO_TOL,
};
use crate::catalysis::catalysis_sweep;
use crate::distill::{compute, DistillOptions, DistillationResult, OpClass, Route};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, PureState};
use crate::sdp::{SolveOptions, SolveStatus};
use crate::states::DistillationInstance;
use grid::{parse_bounded_grid, parse_number};
use input::{amplitude_state, load_density, named_state, InputState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub const THREADS_ENV: &str = "COHERDIST_THREADS";

pub const SWEEP_HEADER: &str = "fidelity,eps,class,m,probability,gap,status";

#[derive(Debug, Parser)]
#[command(
    name = "coherdist",
    version,
    about = "Optimal probabilistic coherence distillation"
)]
pub struct Cli {
    /// Worker threads for sweeps [env: COHERDIST_THREADS, which takes precedence]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal probability for one instance, as JSON
    Compute(ComputeArgs),
    /// Probability over an infidelity grid, as CSV
    Sweep(SweepArgs),
    /// Catalyst-assisted against unassisted DIO over a family grid, as CSV
    Catalysis(CatalysisArgs),
    /// Run the acceptance suite
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct StateSource {
    /// Named state: main_example, threshold_example, v1, v2, u1, u2 or psi:K
    #[arg(long, group = "source")]
    pub state: Option<String>,
    /// Real amplitudes, comma separated (normalized on load)
    #[arg(long, group = "source", allow_hyphen_values = true)]
    pub amps: Option<String>,
    /// JSON file `{"dim": d, "entries": [[re, im], ...]}`, row major
    #[arg(long, group = "source")]
    pub density: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<DistillOptions> {
        let ok = |v: f64| v > 0.0 && v < 1.0;
        if !ok(self.gap_tol) || !ok(self.feas_tol) || self.max_iter == 0 {
            return Err(Error::Parse(
                "solver tolerances must lie in (0, 1) and max-iter be positive".into(),
            ));
        }
        Ok(DistillOptions {
            solver: SolveOptions {
                gap_tol: self.gap_tol,
                feas_tol: self.feas_tol,
                max_iter: self.max_iter,
            },
            ..Default::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[arg(long, default_value = "MIO")]
    pub class: String,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Infidelity, decimal or fraction
    #[arg(long, default_value = "0")]
    pub eps: String,
    /// compact, dual or choi
    #[arg(long, default_value = "compact")]
    pub route: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the JSON here instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Comma-separated classes
    #[arg(long, default_value = "MIO,DIO")]
    pub class: String,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Infidelities: `0.3,1/3,0.4` or `0..0.45:0.05`
    #[arg(long)]
    pub eps: String,
    #[arg(long, default_value = "compact")]
    pub route: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalysisArgs {
    /// v or u
    #[arg(long)]
    pub family: String,
    /// Mixing weights of the family, grid syntax
    #[arg(long)]
    pub q: String,
    /// Catalyst return infidelities, grid syntax
    #[arg(long, default_value = "0")]
    pub delta: String,
    #[arg(long, default_value = "0.01")]
    pub eps: String,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Skip the catalysis criterion (default)
    #[arg(long, conflicts_with = "full")]
    pub quick: bool,
    /// Include the catalysis sweeps
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
    pub seed: u64,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

/// Parallelism: `COHERDIST_THREADS`, then `--threads`, then all cores.
fn thread_count(flag: Option<usize>) -> Result<usize> {
    resolve_threads(std::env::var(THREADS_ENV).ok(), flag)
}

fn resolve_threads(env: Option<String>, flag: Option<usize>) -> Result<usize> {
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Parse(format!(
                "{THREADS_ENV}='{v}' is not a positive integer"
            ))),
        };
    }
    match flag {
        Some(0) => Err(Error::Parse("--threads must be positive".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let pool = match thread_count(cli.threads).and_then(|n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))
    }) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a, out),
        Command::Sweep(a) => cmd_sweep(a, &pool, out, err),
        Command::Catalysis(a) => cmd_catalysis(a, &pool, out, err),
        Command::Verify(a) => cmd_verify(a, &pool, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn read_source(s: &StateSource) -> Result<InputState> {
    match (&s.state, &s.amps, &s.density) {
        (Some(name), None, None) => named_state(name).map(InputState::from_pure),
        (None, Some(list), None) => amplitude_state(list).map(InputState::from_pure),
        (None, None, Some(path)) => load_density(path).map(InputState::from_density),
        _ => Err(Error::Parse(
            "give exactly one of --state, --amps, --density".into(),
        )),
    }
}

fn parse_eps(s: &str) -> Result<f64> {
    let eps = parse_number(s)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Parse(format!("eps = {eps} outside [0, 1)")));
    }
    Ok(eps)
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Closed-form values for a pure input, side by side with the solver.
pub fn analytic_values(psi: &PureState, m: usize, eps: f64) -> Result<serde_json::Value> {
    let a = normalize_amplitudes(psi, DEFAULT_ZERO_TOL)?;
    let mut v = json!({
        "n": a.n(),
        "p_sio_pure": p_sio_pure(&a, m),
        "dio_threshold": dio_threshold(a.n(), m, eps, a.is_uniform(1e-12)),
    });
    if a.n() >= 2 {
        v["mio_lower_bound"] =
            serde_json::to_value(mio_pure_lower_bound(&a, m)?).expect("plain struct");
    }
    if m == 2 {
        v["qubit_target"] = serde_json::to_value(p_qubit_target(&a, eps)?).expect("plain struct");
    }
    Ok(v)
}

fn cmd_compute(a: &ComputeArgs, out: &mut dyn Write) -> Result<i32> {
    let input = read_source(&a.source)?;
    let class: OpClass = a.class.parse()?;
    let route: Route = a.route.parse()?;
    let opts = a.solver.options()?;
    let eps = parse_eps(&a.eps)?;
    let inst = DistillationInstance::new(input.rho.clone(), a.m, eps)?;
    let res = compute(&inst, class, route, &opts)?;
    let mut v = res.to_json();
    v["raw"] = json!(res.raw);
    v["bound"] = json!(res.bound);
    v["iterations"] = json!(res.iterations);
    v["trivial"] = json!(res.trivial);
    v["certificate_residual"] = json!(res.certificate_residual());
    if let Some(psi) = &input.pure {
        v["analytic"] = analytic_values(psi, a.m, eps)?;
    }
    let text = serde_json::to_string_pretty(&v).expect("json value") + "\n";
    emit(out, &a.output, &text)?;
    Ok(EXIT_OK)
}

/// One row of the infidelity sweep; field order is [`SWEEP_HEADER`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub fidelity: f64,
    pub eps: f64,
    pub class: OpClass,
    pub m: usize,
    pub probability: f64,
    pub gap: f64,
    pub status: String,
}

impl SweepRecord {
    pub fn failed(&self) -> bool {
        self.status != format!("{:?}", SolveStatus::Optimal)
    }
}

/// Solves every `(eps, class)` cell on the current rayon pool; cells come
/// back ordered by `eps`, then by class in the order given.
pub fn sweep_results(
    rho: &HermitianOperator,
    classes: &[OpClass],
    m: usize,
    eps_grid: &[f64],
    route: Route,
    opts: &DistillOptions,
) -> Vec<(f64, OpClass, Result<DistillationResult>)> {
    let mut cells: Vec<(f64, OpClass)> = eps_grid
        .iter()
        .flat_map(|&e| classes.iter().map(move |&c| (e, c)))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    cells
        .par_iter()
        .map(|&(eps, class)| {
            let res = DistillationInstance::new(rho.clone(), m, eps)
                .and_then(|inst| compute(&inst, class, route, opts));
            (eps, class, res)
        })
        .collect()
}

pub fn sweep_record(
    eps: f64,
    class: OpClass,
    m: usize,
    res: &Result<DistillationResult>,
) -> SweepRecord {
    let (probability, gap, status) = match res {
        Ok(r) => (r.probability, r.gap, format!("{:?}", r.status)),
        Err(Error::Solver { status, .. }) => (f64::NAN, f64::NAN, format!("{status:?}")),
        Err(_) => (f64::NAN, f64::NAN, "Error".to_string()),
    };
    SweepRecord {
        fidelity: 1.0 - eps,
        eps,
        class,
        m,
        probability,
        gap,
        status,
    }
}

pub fn fidelity_sweep(
    rho: &HermitianOperator,
    classes: &[OpClass],
    m: usize,
    eps_grid: &[f64],
    route: Route,
    opts: &DistillOptions,
) -> Vec<SweepRecord> {
    sweep_results(rho, classes, m, eps_grid, route, opts)
        .iter()
        .map(|(eps, class, res)| sweep_record(*eps, *class, m, res))
        .collect()
}

pub fn sweep_csv(rows: &[SweepRecord]) -> Result<String> {
    if rows.is_empty() {
        return Ok(format!("{SWEEP_HEADER}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_sweep(
    a: &SweepArgs,
    pool: &ThreadPool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let input = read_source(&a.source)?;
    let classes = a
        .class
        .split(',')
        .map(|c| c.trim().parse::<OpClass>())
        .collect::<Result<Vec<_>>>()?;
    let route: Route = a.route.parse()?;
    let opts = a.solver.options()?;
    let grid = parse_bounded_grid(&a.eps, "eps", 0.0, 1.0, false)?;
    DistillationInstance::new(input.rho.clone(), a.m, grid[0])?;
    let rows = pool.install(|| fidelity_sweep(&input.rho, &classes, a.m, &grid, route, &opts));
    emit(out, &a.output, &sweep_csv(&rows)?)?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        writeln!(
            err,
            "warning: {failed} of {} rows did not solve",
            rows.len()
        )?;
    }
    Ok(if failed == rows.len() {
        EXIT_SOLVER
    } else {
        EXIT_OK
    })
}

fn cmd_catalysis(
    a: &CatalysisArgs,
    pool: &ThreadPool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let family = a.family.parse()?;
    let q = parse_bounded_grid(&a.q, "q", 0.0, 1.0, true)?;
    let delta = parse_bounded_grid(&a.delta, "delta", 0.0, 1.0, false)?;
    let eps = parse_eps(&a.eps)?;
    if a.m < 2 {
        return Err(Error::Parse(format!("m must be at least 2, got {}", a.m)));
    }
    let table = pool.install(|| catalysis_sweep(family, &q, &delta, a.m, eps))?;
    for w in &table.warnings {
        writeln!(err, "warning: {w}")?;
    }
    emit(out, &a.output, &table.to_csv()?)?;
    let optimal = format!("{:?}", SolveStatus::Optimal);
    let failed = table.rows.iter().filter(|r| r.status != optimal).count();
    if failed > 0 {
        writeln!(
            err,
            "warning: {failed} of {} rows did not solve",
            table.rows.len()
        )?;
    }
    Ok(if failed == table.rows.len() {
        EXIT_SOLVER
    } else {
        EXIT_OK
    })
}

fn cmd_verify(a: &VerifyArgs, pool: &ThreadPool, out: &mut dyn Write) -> Result<i32> {
    let suite = if a.full { Suite::Full } else { Suite::Quick };
    let seed = a.seed;
    // the suite runs inside the pool; lines stream back as checks finish
    let (tx, rx) = mpsc::channel::<String>();
    let report = std::thread::scope(|s| {
        let worker = s.spawn(move || {
            pool.install(|| {
                acceptance::run_suite(suite, seed, &mut |check| {
                    let _ = tx.send(check.to_string());
                })
            })
        });
        for line in rx {
            let _ = writeln!(out, "{line}");
            let _ = out.flush();
        }
        worker.join()
    })
    .map_err(|_| Error::Domain("verification worker panicked".into()))?;
    writeln!(out, "{}", report.summary())?;
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

#[cfg(test)]
mod tests;
