//! Optimal success probability of `ρ → Ψ_m` at infidelity `ε`, computed
//! through three independent programs: the compact primal over `(G, C)`,
//! its Lagrange dual, and the full Choi-matrix formulation.

pub(crate) mod programs;
mod protocol;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::HermitianOperator;
use crate::sdp::{
    check_certificate, embed_hermitian, solve, CertificateReport, ConicSolution, Embedded,
    EmbeddingMode, HermitianProgram, HermitianValue, SolveOptions, SolveStatus,
};
use crate::states::DistillationInstance;

use programs::{Excess, Membership};
pub use protocol::{
    dephasing_choi, extract_protocol, extract_protocol_with_tol, verify_channel, verify_protocol,
    ChoiMatrix, ProtocolReport, PROTOCOL_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpClass {
    #[serde(rename = "MIO")]
    Mio,
    #[serde(rename = "DIO")]
    Dio,
}

impl OpClass {
    pub(crate) fn membership(self) -> Membership {
        match self {
            OpClass::Mio => Membership::Mio,
            OpClass::Dio => Membership::Dio,
        }
    }
}

impl fmt::Display for OpClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpClass::Mio => "MIO",
            OpClass::Dio => "DIO",
        })
    }
}

impl FromStr for OpClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MIO" => Ok(OpClass::Mio),
            "DIO" => Ok(OpClass::Dio),
            _ => Err(Error::Parse(format!(
                "unknown operation class '{s}' (MIO or DIO)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    CompactPrimal,
    Dual,
    Choi,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::CompactPrimal => "compact_primal",
            Route::Dual => "dual",
            Route::Choi => "choi",
        })
    }
}

impl FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "compact_primal" | "primal" | "compact" => Ok(Route::CompactPrimal),
            "dual" => Ok(Route::Dual),
            "choi" => Ok(Route::Choi),
            _ => Err(Error::Parse(format!("unknown route '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistillOptions {
    pub solver: SolveOptions,
    pub embedding: EmbeddingMode,
    /// Solve DIO through the `(G, C)` form with `G = Δ(G)` instead of the C-only form.
    pub dio_with_g: bool,
}

impl Default for DistillOptions {
    fn default() -> Self {
        Self {
            solver: SolveOptions::default(),
            embedding: EmbeddingMode::Auto,
            dio_with_g: false,
        }
    }
}

/// Solved program with everything needed to audit it.
#[derive(Debug)]
pub struct Certificate {
    pub embedded: Embedded,
    pub solution: ConicSolution,
    pub values: Vec<HermitianValue>,
    pub report: CertificateReport,
}

/// Optimal `(G, C)` of a compact primal.
#[derive(Clone, Debug)]
pub struct CompactOperators {
    pub g: HermitianOperator,
    pub c: HermitianOperator,
}

#[derive(Clone, Debug)]
pub struct DistillationResult {
    pub class: OpClass,
    pub route: Route,
    pub d: usize,
    pub m: usize,
    pub eps: f64,
    /// Clamped to `[0, 1]`.
    pub probability: f64,
    /// Unclamped optimum of the route's own objective.
    pub raw: f64,
    /// Optimum of the opposite side of the same solve (upper bound for
    /// primal routes, lower bound for the dual route).
    pub bound: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// `ε ≥ 1 - 1/m`, answered without solving.
    pub trivial: bool,
    pub wall_time_ms: f64,
    pub certificate: Option<Arc<Certificate>>,
    pub operators: Option<CompactOperators>,
    /// Optimal operation, Choi route only.
    pub choi: Option<ChoiMatrix>,
}

/// Serialized form of a [`DistillationResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub class: OpClass,
    pub route: Route,
    pub d: usize,
    pub m: usize,
    pub eps: f64,
    pub probability: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub wall_time_ms: f64,
}

impl DistillationResult {
    pub fn record(&self) -> ResultRecord {
        ResultRecord {
            class: self.class,
            route: self.route,
            d: self.d,
            m: self.m,
            eps: self.eps,
            probability: self.probability,
            gap: self.gap,
            status: self.status,
            wall_time_ms: self.wall_time_ms,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.record()).expect("plain record")
    }

    /// Largest independently recomputed residual; zero for trivial results.
    pub fn certificate_residual(&self) -> f64 {
        self.certificate
            .as_ref()
            .map_or(0.0, |c| c.report.max_residual())
    }
}

struct Solved {
    cert: Certificate,
    started: Instant,
}

fn run(hp: &HermitianProgram, opts: &DistillOptions, started: Instant) -> Result<Solved> {
    let embedded = embed_hermitian(hp, opts.embedding)?;
    let solution = solve(&embedded.program, &opts.solver);
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: solution.status,
            detail: solution.message.clone(),
        });
    }
    let report = check_certificate(&embedded.program, &solution);
    let values = embedded.recover(&solution.x);
    Ok(Solved {
        cert: Certificate {
            embedded,
            solution,
            values,
            report,
        },
        started,
    })
}

fn finish(
    inst: &DistillationInstance,
    class: OpClass,
    route: Route,
    solved: Solved,
    negate: bool,
    operators: Option<CompactOperators>,
) -> DistillationResult {
    let sol = &solved.cert.solution;
    let (raw, bound) = if negate {
        (-sol.primal_value, -sol.dual_value)
    } else {
        (sol.primal_value, sol.dual_value)
    };
    DistillationResult {
        class,
        route,
        d: inst.dim(),
        m: inst.m,
        eps: inst.eps,
        probability: raw.clamp(0.0, 1.0),
        raw,
        bound,
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
        trivial: false,
        wall_time_ms: solved.started.elapsed().as_secs_f64() * 1e3,
        certificate: Some(Arc::new(solved.cert)),
        operators,
        choi: None,
    }
}

fn trivial(inst: &DistillationInstance, class: OpClass, route: Route) -> DistillationResult {
    let d = inst.dim();
    // replace everything by the maximally mixed output
    let operators = (route == Route::CompactPrimal).then(|| CompactOperators {
        g: HermitianOperator::identity(d),
        c: HermitianOperator::identity(d).scale(1.0 / inst.m as f64),
    });
    DistillationResult {
        class,
        route,
        d,
        m: inst.m,
        eps: inst.eps,
        probability: 1.0,
        raw: 1.0,
        bound: 1.0,
        gap: 0.0,
        status: SolveStatus::Optimal,
        iterations: 0,
        trivial: true,
        wall_time_ms: 0.0,
        certificate: None,
        operators,
        choi: None,
    }
}

pub fn p_mio(inst: &DistillationInstance) -> Result<DistillationResult> {
    p_mio_with(inst, &DistillOptions::default())
}

pub fn p_mio_with(
    inst: &DistillationInstance,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    compact(inst, OpClass::Mio, opts)
}

pub fn p_dio(inst: &DistillationInstance) -> Result<DistillationResult> {
    p_dio_with(inst, &DistillOptions::default())
}

pub fn p_dio_with(
    inst: &DistillationInstance,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    compact(inst, OpClass::Dio, opts)
}

fn compact(
    inst: &DistillationInstance,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    if inst.is_trivial() {
        return Ok(trivial(inst, class, Route::CompactPrimal));
    }
    let started = Instant::now();
    let excess = Excess::for_instance(&inst.rho, inst.eps);
    let mut face = None;
    let (hp, blocks) = match class {
        OpClass::Mio => programs::mio_primal(&inst.rho, inst.m, inst.eps, false, &excess),
        OpClass::Dio if opts.dio_with_g => {
            programs::mio_primal(&inst.rho, inst.m, inst.eps, true, &excess)
        }
        OpClass::Dio => {
            face = programs::fidelity_face(&inst.rho, inst.m, inst.eps);
            programs::dio_primal(&inst.rho, inst.m, inst.eps, &excess, face.as_ref())
        }
    };
    let solved = run(&hp, opts, started)?;
    let vals = &solved.cert.values;
    let c = vals[blocks.c].as_psd().expect("psd block");
    let c = match &face {
        Some(b) => programs::lift(b, c),
        None => c.clone(),
    };
    let s1 = excess.expand(vals[blocks.s1].as_psd().expect("psd block"));
    let g = c.add(&s1);
    let g = if blocks.s2.is_none() {
        // C-only form: G = mΔ(C) is implied, rebuild it exactly
        let m = inst.m as f64;
        HermitianOperator::diagonal(&(0..c.dim()).map(|i| m * c.get(i, i).re).collect::<Vec<_>>())
    } else {
        g
    };
    Ok(finish(
        inst,
        class,
        Route::CompactPrimal,
        solved,
        false,
        Some(CompactOperators { g, c }),
    ))
}

pub fn p_mio_dual(inst: &DistillationInstance) -> Result<DistillationResult> {
    dual(inst, OpClass::Mio, &DistillOptions::default())
}

pub fn p_dio_dual(inst: &DistillationInstance) -> Result<DistillationResult> {
    dual(inst, OpClass::Dio, &DistillOptions::default())
}

pub fn p_dual_with(
    inst: &DistillationInstance,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    dual(inst, class, opts)
}

fn dual(
    inst: &DistillationInstance,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    if inst.is_trivial() {
        return Ok(trivial(inst, class, Route::Dual));
    }
    let started = Instant::now();
    let excess = Excess::for_instance(&inst.rho, inst.eps);
    let hp = match class {
        OpClass::Mio => programs::mio_dual(&inst.rho, inst.m, inst.eps, &excess),
        OpClass::Dio => programs::dio_dual(&inst.rho, inst.m, inst.eps, &excess),
    };
    let solved = run(&hp, opts, started)?;
    Ok(finish(inst, class, Route::Dual, solved, true, None))
}

/// `max p` such that some trace non-increasing `ℰ ∈ class` maps `ρ` to `p·target`.
pub fn p_exact_choi(
    rho: &HermitianOperator,
    target: &HermitianOperator,
    class: OpClass,
) -> Result<DistillationResult> {
    p_exact_choi_with(rho, target, class, &DistillOptions::default())
}

pub fn p_exact_choi_with(
    rho: &HermitianOperator,
    target: &HermitianOperator,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    rho.check_density()?;
    target.check_density()?;
    let started = Instant::now();
    let (hp, jb, face) = programs::exact_choi(rho, target, class.membership());
    let solved = run(&hp, opts, started)?;
    let j = solved.cert.values[jb].as_psd().expect("psd block");
    let j = match &face {
        Some(b) => programs::lift(b, j),
        None => j.clone(),
    };
    let choi = ChoiMatrix::new(rho.dim(), target.dim(), j)?;
    // reported against the smoothed target when the caller uses one
    let d_out = target.dim();
    let eps = 1.0 - target.inner(&crate::states::max_coherent(d_out)?.density());
    let inst = DistillationInstance {
        rho: rho.clone(),
        m: d_out,
        eps: eps.max(0.0),
    };
    let mut res = finish(&inst, class, Route::Choi, solved, false, None);
    res.choi = Some(choi);
    Ok(res)
}

/// Choi matrix `J` of the optimal operation found by [`p_exact_choi`].
pub fn choi_solution(res: &DistillationResult) -> Result<ChoiMatrix> {
    if res.route != Route::Choi {
        return domain("result does not come from the Choi route");
    }
    res.choi
        .clone()
        .ok_or_else(|| Error::Domain("result has no Choi matrix".into()))
}

/// Dispatch by class and route.
pub fn compute(
    inst: &DistillationInstance,
    class: OpClass,
    route: Route,
    opts: &DistillOptions,
) -> Result<DistillationResult> {
    match route {
        Route::CompactPrimal => compact(inst, class, opts),
        Route::Dual => dual(inst, class, opts),
        Route::Choi => {
            if inst.is_trivial() {
                return Ok(trivial(inst, class, Route::Choi));
            }
            let mut r = p_exact_choi_with(&inst.rho, &inst.target(), class, opts)?;
            r.eps = inst.eps;
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests;
