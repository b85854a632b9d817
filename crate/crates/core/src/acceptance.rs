//! Acceptance suite: one check per criterion, each printed with its
//! measured values. Shared by `coherdist verify` and the `acceptance` test
//! target.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytic::{
    mio_pure_lower_bound, normalize_amplitudes, p_qubit_target, p_sio_pure, qubit_eps0,
    SortedAmplitudes, DEFAULT_ZERO_TOL,
};
use crate::catalysis::{p_catalytic_mc, CatalysisInstance, Family};
use crate::cli::{sweep_csv, sweep_record, sweep_results};
use crate::distill::{
    compute, extract_protocol, verify_protocol, DistillOptions, DistillationResult, OpClass, Route,
};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, PureState};
use crate::sdp::SolveStatus;
use crate::states::{
    example_state, max_coherent, random_density, random_pure, smoothed_target,
    DistillationInstance, ExampleState,
};

pub const DEFAULT_SEED: u64 = 7;

/// Agreement of probabilities with closed forms or exact values.
pub const VALUE_TOL: f64 = 1e-6;
/// "Probability is zero": raw primal and dual values.
pub const ZERO_TOL: f64 = 1e-7;
/// Duality gap and certificate residual of every solved instance.
pub const HEALTH_TOL: f64 = 1e-7;
/// Membership and action checks of extracted protocols.
pub const PROTOCOL_CHECK_TOL: f64 = 1e-6;
/// Sudden death: probability just above the threshold.
pub const SUDDEN_DEATH_MIN: f64 = 0.01;
/// Catalysis headline enhancement.
pub const MIN_ENHANCEMENT: f64 = 0.115;
/// Sweep non-negativity of the enhancement ratio.
pub const RATIO_FLOOR: f64 = -1e-6;
/// Slack for monotonicity along grids.
pub const MONOTONE_TOL: f64 = 1e-7;

const POOL_SIZE: usize = 20;
const FULL_RANK_POOL: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Everything except the catalysis sweeps.
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub outcome: Outcome,
    pub measured: String,
    pub seconds: f64,
    pub limit_seconds: Option<f64>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        write!(
            f,
            "{tag} {:>2} {:<28} {}",
            self.id, self.name, self.measured
        )?;
        if self.outcome != Outcome::Skip {
            match self.limit_seconds {
                Some(l) => write!(f, " [{:.2} s, limit {l} s]", self.seconds),
                None => write!(f, " [{:.2} s]", self.seconds),
            }?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn summary(&self) -> String {
        let count = |o| self.checks.iter().filter(|c| c.outcome == o).count();
        format!(
            "{} passed, {} failed, {} skipped",
            count(Outcome::Pass),
            count(Outcome::Fail),
            count(Outcome::Skip)
        )
    }
}

struct Health {
    criterion: usize,
    label: String,
    gap: f64,
    residual: f64,
}

struct ProtocolCheck {
    label: String,
    violation: std::result::Result<f64, String>,
}

/// Every solve made by the criteria, for the protocol and health checks.
#[derive(Default)]
struct Ledger {
    criterion: usize,
    health: Vec<Health>,
    protocols: Vec<ProtocolCheck>,
}

impl Ledger {
    fn solve(
        &mut self,
        label: &str,
        inst: &DistillationInstance,
        class: OpClass,
        route: Route,
    ) -> Result<DistillationResult> {
        let res = compute(inst, class, route, &DistillOptions::default());
        self.record(label, inst, &res);
        res
    }

    fn record(
        &mut self,
        label: &str,
        inst: &DistillationInstance,
        res: &Result<DistillationResult>,
    ) {
        let label = match res {
            Ok(r) => format!("{label} {} {}", r.class, r.route),
            Err(_) => label.to_string(),
        };
        match res {
            Err(e) => self.health.push(Health {
                criterion: self.criterion,
                label: format!("{label}: {e}"),
                gap: f64::INFINITY,
                residual: f64::INFINITY,
            }),
            Ok(r) if r.trivial => {}
            Ok(r) => {
                self.health.push(Health {
                    criterion: self.criterion,
                    label: label.clone(),
                    gap: r.gap,
                    residual: r.certificate_residual(),
                });
                if r.route == Route::CompactPrimal && r.status == SolveStatus::Optimal {
                    let violation = protocol_violation(inst, r).map_err(|e| e.to_string());
                    self.protocols.push(ProtocolCheck { label, violation });
                }
            }
        }
    }
}

fn protocol_violation(inst: &DistillationInstance, r: &DistillationResult) -> Result<f64> {
    let ops = r
        .operators
        .as_ref()
        .ok_or_else(|| Error::Domain("compact result without operators".into()))?;
    let j = extract_protocol(inst, &ops.g, &ops.c)?;
    let rep = verify_protocol(&j, r.class, &inst.rho, r.probability, &inst.target())?;
    Ok(rep.max_violation())
}

type Measured = Result<(bool, String)>;

fn sub_seed(seed: u64, criterion: u64, i: usize) -> u64 {
    seed.wrapping_mul(1000)
        .wrapping_add(criterion * 100 + i as u64)
}

fn pure_inst(psi: &PureState, m: usize, eps: f64) -> Result<DistillationInstance> {
    DistillationInstance::pure(psi, m, eps)
}

fn amps(psi: &PureState) -> Result<SortedAmplitudes> {
    normalize_amplitudes(psi, DEFAULT_ZERO_TOL)
}

/// Primal and dual values of a no-go instance, both required `≤ ZERO_TOL`.
fn certified_zero(
    l: &mut Ledger,
    label: &str,
    inst: &DistillationInstance,
    class: OpClass,
) -> Result<(f64, f64)> {
    let p = l.solve(label, inst, class, Route::CompactPrimal)?;
    let d = l.solve(label, inst, class, Route::Dual)?;
    Ok((p.raw, d.raw))
}

fn c1_headline(l: &mut Ledger) -> Measured {
    let psi = example_state(ExampleState::MainExample);
    let inst = pure_inst(&psi, 2, 0.1)?;
    let mut worst: f64 = 0.0;
    for class in [OpClass::Mio, OpClass::Dio] {
        for route in [Route::CompactPrimal, Route::Dual, Route::Choi] {
            let r = l.solve("main_example eps=0.1", &inst, class, route)?;
            worst = worst.max((r.probability - 0.5).abs());
        }
    }
    Ok((
        worst <= VALUE_TOL,
        format!("max |p - 1/2| = {worst:.1e} over 2 classes x 3 routes"),
    ))
}

fn c2_boundary(l: &mut Ledger) -> Measured {
    let psi = example_state(ExampleState::MainExample);
    let eps0 = qubit_eps0(&amps(&psi)?);
    let mut dev_one: f64 = 0.0;
    let mut dev_half: f64 = 0.0;
    let mut below: f64 = 0.0;
    for class in [OpClass::Mio, OpClass::Dio] {
        for route in [Route::CompactPrimal, Route::Dual] {
            let one = l.solve(
                "main_example eps=0.2",
                &pure_inst(&psi, 2, 0.2)?,
                class,
                route,
            )?;
            dev_one = dev_one.max((one.probability - 1.0).abs());
            let half = l.solve(
                "main_example eps=0.1",
                &pure_inst(&psi, 2, 0.1)?,
                class,
                route,
            )?;
            dev_half = dev_half.max((half.probability - 0.5).abs());
        }
        let r = l.solve(
            "main_example eps=0.19",
            &pure_inst(&psi, 2, 0.19)?,
            class,
            Route::CompactPrimal,
        )?;
        below = below.max(r.probability);
    }
    let pass = (eps0 - 0.2).abs() <= VALUE_TOL
        && dev_one <= VALUE_TOL
        && dev_half <= VALUE_TOL
        && below < 1.0 - 1e-3;
    Ok((
        pass,
        format!(
            "eps0 = {eps0:.9}, max |P(0.2) - 1| = {dev_one:.1e}, max |P(0.1) - 1/2| = {dev_half:.1e}, P(0.19) = {below:.6}"
        ),
    ))
}

fn c3_qubit_target(l: &mut Ledger, seed: u64) -> Measured {
    let mut worst: f64 = 0.0;
    let mut solves = 0;
    for i in 0..POOL_SIZE {
        let psi = random_pure(2 + i % 4, sub_seed(seed, 3, i))?;
        let a = amps(&psi)?;
        for k in 0..10 {
            let eps = 0.05 * k as f64;
            let want = p_qubit_target(&a, eps)?.probability;
            let inst = pure_inst(&psi, 2, eps)?;
            for class in [OpClass::Mio, OpClass::Dio] {
                let r = l.solve(
                    &format!("pool3[{i}] eps={eps:.2}"),
                    &inst,
                    class,
                    Route::CompactPrimal,
                )?;
                worst = worst.max((r.probability - want).abs());
                solves += 1;
            }
        }
    }
    Ok((
        worst <= VALUE_TOL,
        format!("max |p - closed form| = {worst:.1e} over {solves} solves"),
    ))
}

fn pure_pool(seed: u64) -> Result<Vec<PureState>> {
    (0..POOL_SIZE)
        .map(|i| random_pure(2 + i % 5, sub_seed(seed, 4, i)))
        .collect()
}

fn c4_dio_equals_sio(l: &mut Ledger, pool: &[PureState]) -> Measured {
    let mut worst: f64 = 0.0;
    let mut solves = 0;
    for (i, psi) in pool.iter().enumerate() {
        let a = amps(psi)?;
        for m in 2..=6 {
            let r = l.solve(
                &format!("pool[{i}] m={m}"),
                &pure_inst(psi, m, 0.0)?,
                OpClass::Dio,
                Route::CompactPrimal,
            )?;
            worst = worst.max((r.raw - p_sio_pure(&a, m)).abs());
            solves += 1;
        }
    }
    Ok((
        worst <= VALUE_TOL,
        format!("max |p_dio - p_sio| = {worst:.1e} over {solves} solves"),
    ))
}

fn c5_full_rank(l: &mut Ledger, seed: u64) -> Measured {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut solves = 0;
    for i in 0..FULL_RANK_POOL {
        let d = 2 + i % 4;
        let rho = random_density(d, d, sub_seed(seed, 5, i))?;
        min_eig = min_eig.min(rho.min_eigenvalue());
        for m in [2, 3] {
            let inst = DistillationInstance::new(rho.clone(), m, 0.0)?;
            for class in [OpClass::Mio, OpClass::Dio] {
                let (p, d) = certified_zero(l, &format!("full_rank[{i}] m={m}"), &inst, class)?;
                worst = worst.max(p).max(d);
                solves += 2;
            }
        }
    }
    Ok((
        worst <= ZERO_TOL && min_eig > 0.0,
        format!("max(primal, dual) = {worst:.1e} over {solves} solves, min input eigenvalue {min_eig:.1e}"),
    ))
}

fn c6_mio_bounds(l: &mut Ledger, pool: &[PureState]) -> Measured {
    let mut slack = f64::INFINITY;
    let mut order = f64::INFINITY;
    let mut weak_min = f64::INFINITY;
    for (i, psi) in pool.iter().enumerate() {
        let a = amps(psi)?;
        for m in 2..=8 {
            let b = mio_pure_lower_bound(&a, m)?;
            let r = l.solve(
                &format!("pool[{i}] m={m}"),
                &pure_inst(psi, m, 0.0)?,
                OpClass::Mio,
                Route::CompactPrimal,
            )?;
            slack = slack.min(r.raw - b.tight);
            order = order.min(b.tight - b.weak);
            weak_min = weak_min.min(b.weak);
        }
    }
    let mut closed: f64 = 0.0;
    for n in 2..=5 {
        let a = amps(&max_coherent(n)?)?;
        for m in n + 1..=8 {
            let tight = mio_pure_lower_bound(&a, m)?.tight;
            closed = closed.max((tight - (n - 1) as f64 / (m - 1) as f64).abs());
        }
    }
    let special = l
        .solve(
            "psi2 -> psi3",
            &pure_inst(&max_coherent(2)?, 3, 0.0)?,
            OpClass::Mio,
            Route::CompactPrimal,
        )?
        .raw;
    let pass = slack >= -VALUE_TOL
        && order >= -VALUE_TOL
        && weak_min > 0.0
        && closed <= 1e-12
        && special >= 0.5 - VALUE_TOL;
    Ok((
        pass,
        format!(
            "min(p - tight) = {slack:.1e}, min(tight - weak) = {order:.1e}, min weak = {weak_min:.3e}, \
             closed-form dev {closed:.1e}, P(psi2->psi3) = {special:.6}"
        ),
    ))
}

fn c7_sudden_death(l: &mut Ledger) -> Measured {
    let psi = example_state(ExampleState::ThresholdExample);
    let mut zero: f64 = f64::NEG_INFINITY;
    for eps in [0.30, 0.32] {
        let (p, d) = certified_zero(
            l,
            &format!("threshold example eps={eps}"),
            &pure_inst(&psi, 3, eps)?,
            OpClass::Dio,
        )?;
        zero = zero.max(p).max(d);
    }
    let third = l
        .solve(
            "threshold example eps=1/3",
            &pure_inst(&psi, 3, 1.0 / 3.0)?,
            OpClass::Dio,
            Route::CompactPrimal,
        )?
        .probability;
    let grid = [0.30, 0.32, 1.0 / 3.0, 0.35, 0.40, 0.45, 0.50, 0.60];
    let cells = sweep_results(
        &psi.density(),
        &[OpClass::Dio],
        3,
        &grid,
        Route::CompactPrimal,
        &DistillOptions::default(),
    );
    let mut records = Vec::new();
    for (eps, class, res) in &cells {
        l.record(
            &format!("threshold example sweep eps={eps:.4}"),
            &pure_inst(&psi, 3, *eps)?,
            res,
        );
        records.push(sweep_record(*eps, *class, 3, res));
    }
    let csv_text = sweep_csv(&records)?;
    let probs = csv_probabilities(&csv_text)?;
    let monotone = probs.windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL)
        && probs.iter().all(|p| p.is_finite());
    let pass = zero <= ZERO_TOL && third >= SUDDEN_DEATH_MIN && monotone;
    Ok((
        pass,
        format!(
            "max certified zero = {zero:.1e}, P(1/3) = {third:.4}, sweep of {} rows monotone: {monotone}",
            probs.len()
        ),
    ))
}

/// The probability column, read back from the CSV text.
fn csv_probabilities(text: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == "probability")
        .ok_or_else(|| Error::Parse("sweep CSV has no probability column".into()))?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| Error::Parse(e.to_string()))?;
            r[col]
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))
        })
        .collect()
}

fn c8_maximally_coherent(l: &mut Ledger) -> Measured {
    let psi = max_coherent(2)?;
    let mut one: f64 = 0.0;
    for eps in [1.0 / 3.0, 0.4] {
        let r = l.solve(
            &format!("psi2->psi3 eps={eps:.4}"),
            &pure_inst(&psi, 3, eps)?,
            OpClass::Dio,
            Route::CompactPrimal,
        )?;
        one = one.max((r.probability - 1.0).abs());
    }
    let mut zero: f64 = f64::NEG_INFINITY;
    for eps in [0.2, 0.3] {
        let (p, d) = certified_zero(
            l,
            &format!("psi2->psi3 eps={eps}"),
            &pure_inst(&psi, 3, eps)?,
            OpClass::Dio,
        )?;
        zero = zero.max(p).max(d);
    }
    Ok((
        one <= VALUE_TOL && zero <= ZERO_TOL,
        format!("max |P - 1| = {one:.1e} at eps in {{1/3, 0.4}}, max certified zero = {zero:.1e} at eps in {{0.2, 0.3}}"),
    ))
}

/// `(family, q, δ)` cells of the catalysis grids.
fn catalysis_cells() -> Vec<(Family, f64, f64)> {
    let mut cells = Vec::new();
    for family in [Family::V, Family::U] {
        let (lo, hi) = family.q_range();
        let n = ((hi - lo) / 0.1 + 1e-9).round() as usize;
        for k in 0..=n {
            let q = ((lo + 0.1 * k as f64) * 10.0).round() / 10.0;
            for delta in [0.0, 0.005, 0.01] {
                cells.push((family, q, delta));
            }
        }
    }
    cells
}

fn catalysis_inst(family: Family, q: f64, delta: f64) -> Result<CatalysisInstance> {
    CatalysisInstance::new(family.density(q)?, max_coherent(2)?, 2, 0.01, delta)
}

fn c9_catalysis(l: &mut Ledger) -> Measured {
    let cells = catalysis_cells();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(family, q, delta)| {
            catalysis_inst(family, q, delta)
                .and_then(|inst| p_catalytic_mc(&inst, OpClass::Dio, &DistillOptions::default()))
        })
        .collect();
    let mut headline = f64::NAN;
    let mut headline_channel = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut monotone = true;
    let mut failures = 0;
    for (k, (&(family, q, delta), res)) in cells.iter().zip(&results).enumerate() {
        let label = format!("catalysis {family} q={q} delta={delta}");
        let r = match res {
            Ok(r) if r.status == SolveStatus::Optimal => r,
            Ok(r) => {
                failures += 1;
                l.health.push(Health {
                    criterion: 9,
                    label,
                    gap: r.gap,
                    residual: f64::INFINITY,
                });
                continue;
            }
            Err(e) => {
                failures += 1;
                l.health.push(Health {
                    criterion: 9,
                    label: format!("{label}: {e}"),
                    gap: f64::INFINITY,
                    residual: f64::INFINITY,
                });
                continue;
            }
        };
        l.health.push(Health {
            criterion: 9,
            label,
            gap: r.gap,
            residual: r.certificate_residual(),
        });
        min_ratio = min_ratio.min(r.enhancement_ratio);
        if delta > 0.0 {
            if let Ok(prev) = &results[k - 1] {
                monotone &= r.probability >= prev.probability - MONOTONE_TOL;
            }
        }
        if family == Family::V && q == 0.5 && delta == 0.0 {
            headline = r.enhancement_ratio;
            let inst = catalysis_inst(family, q, delta)?;
            headline_channel = r.verify(&inst)?.map_or(0.0, |rep| rep.max_violation());
        }
    }
    let pass = headline >= MIN_ENHANCEMENT
        && headline_channel <= PROTOCOL_CHECK_TOL
        && failures == 0
        && min_ratio >= RATIO_FLOOR
        && monotone;
    Ok((
        pass,
        format!(
            "headline ratio = {headline:.4}, channel violation {headline_channel:.1e}; {} cells, \
             {failures} unsolved, min ratio {min_ratio:.2e}, monotone in delta: {monotone}",
            cells.len()
        ),
    ))
}

fn c10_protocols(l: &Ledger) -> Measured {
    let mut worst: f64 = 0.0;
    let mut broken = Vec::new();
    for p in &l.protocols {
        match &p.violation {
            Ok(v) => {
                worst = worst.max(*v);
                if *v > PROTOCOL_CHECK_TOL {
                    broken.push(p.label.clone());
                }
            }
            Err(e) => broken.push(format!("{}: {e}", p.label)),
        }
    }
    let mut msg = format!(
        "max violation = {worst:.1e} over {} extracted protocols",
        l.protocols.len()
    );
    if let Some(first) = broken.first() {
        msg += &format!("; {} failing, first: {first}", broken.len());
    }
    Ok((broken.is_empty() && !l.protocols.is_empty(), msg))
}

fn c11_health(l: &Ledger) -> Measured {
    let gap = l.health.iter().map(|h| h.gap).fold(0.0, f64::max);
    let res = l.health.iter().map(|h| h.residual).fold(0.0, f64::max);
    let bad: Vec<&Health> = l
        .health
        .iter()
        .filter(|h| !(h.gap <= HEALTH_TOL && h.residual <= HEALTH_TOL))
        .collect();
    let mut msg = format!(
        "max gap = {gap:.1e}, max residual = {res:.1e} over {} solves",
        l.health.len()
    );
    if let Some(h) = bad.first() {
        msg += &format!(
            "; {} unhealthy, first: criterion {} {}",
            bad.len(),
            h.criterion,
            h.label
        );
    }
    Ok((bad.is_empty(), msg))
}

fn c12_discontinuity(l: &mut Ledger) -> Measured {
    let mut zero: f64 = f64::NEG_INFINITY;
    for delta in [1e-1, 1e-2, 1e-3] {
        let rho: HermitianOperator = smoothed_target(2, delta)?;
        let inst = DistillationInstance::new(rho, 2, 0.0)?;
        let (p, d) = certified_zero(l, &format!("smoothed delta={delta}"), &inst, OpClass::Mio)?;
        zero = zero.max(p).max(d);
    }
    let one = l
        .solve(
            "psi2 -> psi2",
            &pure_inst(&max_coherent(2)?, 2, 0.0)?,
            OpClass::Mio,
            Route::CompactPrimal,
        )?
        .probability;
    Ok((
        zero <= ZERO_TOL && (one - 1.0).abs() <= VALUE_TOL,
        format!("max certified zero = {zero:.1e} for delta in {{1e-1, 1e-2, 1e-3}}, P(psi2 -> psi2) = {one:.9}"),
    ))
}

fn finish(
    id: usize,
    name: &'static str,
    limit: Option<f64>,
    started: Instant,
    m: Measured,
) -> Check {
    let seconds = started.elapsed().as_secs_f64();
    let (ok, measured) = match m {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = limit.is_none_or(|l| seconds <= l);
    let measured = if ok && !in_time {
        format!("{measured}; over time")
    } else {
        measured
    };
    Check {
        id,
        name,
        outcome: if ok && in_time {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured,
        seconds,
        limit_seconds: limit,
    }
}

/// Runs every criterion in order, handing each check to `on_check` as it
/// completes. Deterministic in `seed` apart from timings.
pub fn run_suite(suite: Suite, seed: u64, on_check: &mut dyn FnMut(&Check)) -> Report {
    let mut l = Ledger::default();
    let mut report = Report::default();
    let mut push = |report: &mut Report, c: Check| {
        on_check(&c);
        report.checks.push(c);
    };
    macro_rules! criterion {
        ($id:expr, $name:expr, $limit:expr, $body:expr) => {{
            l.criterion = $id;
            let t = Instant::now();
            let m = $body;
            finish($id, $name, $limit, t, m)
        }};
    }

    let c = criterion!(1, "qubit-target headline", Some(1.0), c1_headline(&mut l));
    push(&mut report, c);
    let c = criterion!(2, "deterministic boundary", None, c2_boundary(&mut l));
    push(&mut report, c);
    let c = criterion!(
        3,
        "qubit-target closed form",
        Some(30.0),
        c3_qubit_target(&mut l, seed)
    );
    push(&mut report, c);
    let pool = pure_pool(seed);
    let c = criterion!(
        4,
        "DIO equals SIO on pure",
        Some(60.0),
        pool.as_ref()
            .map_err(clone_err)
            .and_then(|p| c4_dio_equals_sio(&mut l, p))
    );
    push(&mut report, c);
    let c = criterion!(5, "full-rank no-go", Some(30.0), c5_full_rank(&mut l, seed));
    push(&mut report, c);
    let c = criterion!(
        6,
        "MIO lower bounds",
        None,
        pool.as_ref()
            .map_err(clone_err)
            .and_then(|p| c6_mio_bounds(&mut l, p))
    );
    push(&mut report, c);
    let c = criterion!(7, "sudden death", Some(10.0), c7_sudden_death(&mut l));
    push(&mut report, c);
    let c = criterion!(
        8,
        "maximally coherent threshold",
        Some(5.0),
        c8_maximally_coherent(&mut l)
    );
    push(&mut report, c);
    let c = match suite {
        Suite::Full => criterion!(9, "catalysis", Some(600.0), c9_catalysis(&mut l)),
        Suite::Quick => Check {
            id: 9,
            name: "catalysis",
            outcome: Outcome::Skip,
            measured: "quick suite; run with --full".into(),
            seconds: 0.0,
            limit_seconds: Some(600.0),
        },
    };
    push(&mut report, c);
    // 10 covers criteria 1-8; 11 covers everything, so 12 runs first
    let c10 = criterion!(10, "protocol soundness", None, c10_protocols(&l));
    push(&mut report, c10);
    let c12 = criterion!(12, "discontinuity witness", None, c12_discontinuity(&mut l));
    let c11 = criterion!(11, "solver health", None, c11_health(&l));
    push(&mut report, c11);
    push(&mut report, c12);
    report
}

fn clone_err(e: &Error) -> Error {
    Error::Domain(e.to_string())
}
