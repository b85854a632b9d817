//! Catalysis-assisted distillation: `Π(ρ ⊗ γ)` must return the catalyst
//! (up to infidelity `δ`) on both the success and the failure branch.
//!
//! Output register order is `flag ⊗ target ⊗ catalyst` with flag `0` for
//! success.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distill::programs::{
    action_terms, add_membership_rows, choi_face, lift, marginal_terms, term,
};
use crate::distill::{compute, ChoiMatrix, DistillOptions, OpClass, ProtocolReport, Route};
use crate::error::{domain, Error, Result};
use crate::linalg::{tensor, HermitianOperator, PureState, C64};
use crate::sdp::{
    check_certificate, embed_hermitian, solve, CertificateReport, HermitianMap, HermitianProgram,
    SolveStatus, Term,
};
use crate::states::{
    example_state, max_coherent, mixture, smoothed_target, DistillationInstance, ExampleState,
};

/// Largest Choi matrix, in entries, the builders accept.
pub const MAX_CHOI_ENTRIES: usize = 4096;

#[derive(Clone, Debug)]
pub struct CatalysisInstance {
    pub rho: HermitianOperator,
    pub catalyst: PureState,
    pub m: usize,
    pub eps: f64,
    pub delta: f64,
}

impl CatalysisInstance {
    pub fn new(
        rho: HermitianOperator,
        catalyst: PureState,
        m: usize,
        eps: f64,
        delta: f64,
    ) -> Result<Self> {
        // reuses the (ρ, m, ε) validation
        DistillationInstance::new(rho.clone(), m, eps)?;
        if !(0.0..1.0).contains(&delta) {
            return domain(format!(
                "catalyst infidelity must lie in [0, 1), got {delta}"
            ));
        }
        Ok(Self {
            rho,
            catalyst,
            m,
            eps,
            delta,
        })
    }

    pub fn unassisted(&self) -> DistillationInstance {
        DistillationInstance {
            rho: self.rho.clone(),
            m: self.m,
            eps: self.eps,
        }
    }

    pub fn d(&self) -> usize {
        self.rho.dim()
    }

    pub fn k(&self) -> usize {
        self.catalyst.dim()
    }

    fn d_in(&self) -> usize {
        self.d() * self.k()
    }

    fn d_out(&self) -> usize {
        2 * self.m * self.k()
    }

    fn check_size(&self) -> Result<()> {
        let side = self.d_in() * self.d_out();
        if side * side > MAX_CHOI_ENTRIES {
            return Err(Error::Resource(format!(
                "Choi matrix of side {side} exceeds the {MAX_CHOI_ENTRIES}-entry budget"
            )));
        }
        Ok(())
    }

    fn input(&self) -> HermitianOperator {
        tensor(&self.rho, &self.catalyst.density())
    }
}

/// Which catalytic program produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalystForm {
    /// Maximally coherent catalyst, returned as `Ψ_k^δ` on both branches.
    MaximallyCoherent,
    /// General pure catalyst, returned as `V/tr V` and `W/tr W`.
    Pure,
}

#[derive(Clone, Debug)]
pub struct CatalysisResult {
    pub class: OpClass,
    pub form: CatalystForm,
    /// Assisted probability, clamped to `[0, 1]`.
    pub probability: f64,
    pub raw: f64,
    pub unassisted: f64,
    pub enhancement_ratio: f64,
    /// Larger of the assisted and unassisted gaps.
    pub gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_time_ms: f64,
    /// `None` in the trivial regime.
    pub channel: Option<ChoiMatrix>,
    /// `Π(ρ ⊗ γ)` required by the solution.
    pub output: HermitianOperator,
    pub report: Option<CertificateReport>,
}

impl CatalysisResult {
    pub fn certificate_residual(&self) -> f64 {
        self.report.as_ref().map_or(0.0, |r| r.max_residual())
    }

    /// Independent check that the channel is in `class`, trace preserving and
    /// produces [`Self::output`].
    pub fn verify(&self, inst: &CatalysisInstance) -> Result<Option<ProtocolReport>> {
        match &self.channel {
            None => Ok(None),
            Some(j) => {
                crate::distill::verify_channel(j, self.class, &inst.input(), &self.output).map(Some)
            }
        }
    }
}

/// `(p - u)/u`; zero when both vanish, infinite when only `u` does.
pub fn enhancement_ratio(assisted: f64, unassisted: f64) -> f64 {
    const TINY: f64 = 1e-12;
    if unassisted > TINY {
        (assisted - unassisted) / unassisted
    } else if assisted > 1e-9 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Blocks and rows shared by both catalytic programs: `J ⪰ 0`, `tr_B J = 1`,
/// class membership.
fn channel_program(inst: &CatalysisInstance, class: OpClass) -> (HermitianProgram, usize) {
    let (d_in, d_out) = (inst.d_in(), inst.d_out());
    let mut hp = HermitianProgram::new();
    let jb = hp.add_psd(d_in * d_out);
    hp.add_matrix_equation(&HermitianOperator::identity(d_in), |a, a2| {
        marginal_terms(jb, d_out, a, a2)
    });
    add_membership_rows(&mut hp, jb, d_in, d_out, class.membership());
    (hp, jb)
}

/// `|f><f| ⊗ A ⊗ B` on `2 ⊗ m ⊗ k`.
fn flagged(f: usize, a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    let flag = HermitianOperator::basis_projector(2, f);
    tensor(&flag, &tensor(a, b))
}

fn check_mc_catalyst(inst: &CatalysisInstance) -> Result<()> {
    let k = inst.k();
    if k < 2 {
        return domain("catalyst must have dimension at least 2");
    }
    let psi = max_coherent(k)?;
    if (inst.catalyst.overlap(&psi.density()) - 1.0).abs() > 1e-9 {
        return domain("catalyst is not maximally coherent");
    }
    Ok(())
}

struct Assisted {
    raw: f64,
    gap: f64,
    status: SolveStatus,
    iterations: usize,
    channel: ChoiMatrix,
    output: HermitianOperator,
    report: CertificateReport,
}

fn solve_program(
    hp: &HermitianProgram,
    opts: &DistillOptions,
) -> Result<(
    crate::sdp::Embedded,
    crate::sdp::ConicSolution,
    Vec<crate::sdp::HermitianValue>,
)> {
    let embedded = embed_hermitian(hp, opts.embedding)?;
    let sol = solve(&embedded.program, &opts.solver);
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            detail: sol.message.clone(),
        });
    }
    let values = embedded.recover(&sol.x);
    Ok((embedded, sol, values))
}

/// Restricts `J` to the face implied by the output shape, solves, and lifts
/// `J` back.
fn solve_channel(
    inst: &CatalysisInstance,
    mut hp: HermitianProgram,
    jb: usize,
    shape: &HermitianOperator,
    opts: &DistillOptions,
) -> Result<(
    crate::sdp::ConicSolution,
    Vec<crate::sdp::HermitianValue>,
    ChoiMatrix,
    CertificateReport,
)> {
    let input = inst.input();
    let face = choi_face(&input, shape);
    if let Some(b) = &face {
        hp.restrict_psd(jb, b)?;
    }
    let (embedded, sol, values) = solve_program(&hp, opts)?;
    let report = check_certificate(&embedded.program, &sol);
    let j = values[jb].as_psd().expect("psd block");
    let j = match &face {
        Some(b) => lift(b, j),
        None => j.clone(),
    };
    let channel = ChoiMatrix::new(inst.d_in(), inst.d_out(), j)?;
    Ok((sol, values, channel, report))
}

fn mc_program(inst: &CatalysisInstance, class: OpClass, opts: &DistillOptions) -> Result<Assisted> {
    let (mut hp, jb) = channel_program(inst, class);
    let pb = hp.add_nonneg(1);
    let cat = smoothed_target(inst.k(), inst.delta)?;
    let ok = flagged(0, &smoothed_target(inst.m, inst.eps)?, &cat);
    let fail = flagged(
        1,
        &HermitianOperator::identity(inst.m).scale(1.0 / inst.m as f64),
        &cat,
    );
    let input = inst.input();
    let d_out = inst.d_out();
    // Π(ρ⊗γ) - p (ok - fail) = fail
    hp.add_matrix_equation(&fail, |b, b2| {
        let mut t = action_terms(jb, &input, d_out, b, b2);
        t.push(Term {
            block: pb,
            p: 0,
            q: 0,
            coef: fail.get(b, b2) - ok.get(b, b2),
        });
        t
    });
    let mut obj = HermitianMap::new();
    obj.scalar(pb, 0, 1.0);
    hp.set_objective(obj);

    let (sol, values, channel, report) = solve_channel(inst, hp, jb, &ok.add(&fail), opts)?;
    let p = values[pb].as_nonneg().expect("nonneg block")[0];
    Ok(Assisted {
        raw: sol.primal_value,
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
        channel,
        output: ok.scale(p).add(&fail.scale(1.0 - p)),
        report,
    })
}

/// With `δ = 0` the fidelity rows force `V ∝ γ` and `W ∝ γ`, so both become
/// scalars; otherwise `V, W` are `k × k` blocks.
fn pure_program(
    inst: &CatalysisInstance,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<Assisted> {
    let (mut hp, jb) = channel_program(inst, class);
    let k = inst.k();
    let m = inst.m;
    let exact = inst.delta == 0.0;
    let (vb, wb) = if exact {
        (hp.add_nonneg(1), hp.add_nonneg(1))
    } else {
        (hp.add_psd(k), hp.add_psd(k))
    };
    let target = smoothed_target(m, inst.eps)?;
    let mixed = HermitianOperator::identity(m).scale(1.0 / m as f64);
    let gamma = inst.catalyst.density();
    let input = inst.input();
    let d_out = inst.d_out();
    let split = |o: usize| (o / (m * k), (o / k) % m, o % k);
    // Π(ρ⊗γ) = |0><0| ⊗ Ψ_m^ε ⊗ V + |1><1| ⊗ 1/m ⊗ W
    hp.add_matrix_equation(&HermitianOperator::zeros(d_out), |o, o2| {
        let mut t = action_terms(jb, &input, d_out, o, o2);
        let ((f, a, c), (f2, a2, c2)) = (split(o), split(o2));
        if f != f2 {
            return t;
        }
        let (block, w) = if f == 0 {
            (vb, target.get(a, a2))
        } else {
            (wb, mixed.get(a, a2))
        };
        if exact {
            let w = w * gamma.get(c, c2);
            if w.norm() != 0.0 {
                t.push(Term {
                    block,
                    p: 0,
                    q: 0,
                    coef: -w,
                });
            }
        } else if w.norm() != 0.0 {
            t.push(Term {
                block,
                p: c,
                q: c2,
                coef: -w,
            });
        }
        t
    });
    let mut obj = HermitianMap::new();
    if exact {
        obj.scalar(vb, 0, 1.0);
    } else {
        // tr γV ≥ (1-δ) tr V, same for W
        let slack = hp.add_nonneg(2);
        let id = HermitianOperator::identity(k);
        for (i, b) in [vb, wb].into_iter().enumerate() {
            let mut row = HermitianMap::new();
            row.trace_with(b, &gamma, 1.0)
                .trace_with(b, &id, -(1.0 - inst.delta))
                .scalar(slack, i, -1.0);
            hp.add_constraint(row, 0.0);
        }
        obj.extend((0..k).map(|i| term(vb, i, i, 1.0)));
    }
    hp.set_objective(obj);

    let shape_cat = if exact {
        gamma.clone()
    } else {
        HermitianOperator::identity(k)
    };
    let shape = flagged(0, &target, &shape_cat).add(&flagged(1, &mixed, &shape_cat));
    let (sol, values, channel, report) = solve_channel(inst, hp, jb, &shape, opts)?;
    let block_value = |b: usize| match &values[b] {
        crate::sdp::HermitianValue::Psd(h) => h.clone(),
        crate::sdp::HermitianValue::Nonneg(v) => gamma.scale(v[0]),
    };
    let (v, w) = (block_value(vb), block_value(wb));
    Ok(Assisted {
        raw: sol.primal_value,
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
        channel,
        output: flagged(0, &target, &v).add(&flagged(1, &mixed, &w)),
        report,
    })
}

fn catalytic(
    inst: &CatalysisInstance,
    class: OpClass,
    form: CatalystForm,
    opts: &DistillOptions,
) -> Result<CatalysisResult> {
    if form == CatalystForm::MaximallyCoherent {
        check_mc_catalyst(inst)?;
    }
    inst.check_size()?;
    let started = Instant::now();
    let base = compute(&inst.unassisted(), class, Route::CompactPrimal, opts)?;
    if base.trivial {
        return Ok(CatalysisResult {
            class,
            form,
            probability: 1.0,
            raw: 1.0,
            unassisted: 1.0,
            enhancement_ratio: 0.0,
            gap: 0.0,
            status: SolveStatus::Optimal,
            iterations: 0,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            channel: None,
            output: HermitianOperator::zeros(inst.d_out()),
            report: None,
        });
    }
    let a = match form {
        CatalystForm::MaximallyCoherent => mc_program(inst, class, opts)?,
        CatalystForm::Pure => pure_program(inst, class, opts)?,
    };
    let probability = a.raw.clamp(0.0, 1.0);
    Ok(CatalysisResult {
        class,
        form,
        probability,
        raw: a.raw,
        unassisted: base.probability,
        enhancement_ratio: enhancement_ratio(probability, base.probability),
        gap: a.gap.max(base.gap),
        status: a.status,
        iterations: a.iterations,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        channel: Some(a.channel),
        output: a.output,
        report: Some(a.report),
    })
}

/// Maximally coherent catalyst returned as `Ψ_k^δ`.
pub fn p_catalytic_mc(
    inst: &CatalysisInstance,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<CatalysisResult> {
    catalytic(inst, class, CatalystForm::MaximallyCoherent, opts)
}

/// General pure catalyst through the `V = pγ₀`, `W = (1-p)γ₁` program.
pub fn p_catalytic_pure(
    inst: &CatalysisInstance,
    class: OpClass,
    opts: &DistillOptions,
) -> Result<CatalysisResult> {
    catalytic(inst, class, CatalystForm::Pure, opts)
}

pub fn p_dio_catalytic_mc(inst: &CatalysisInstance) -> Result<CatalysisResult> {
    p_catalytic_mc(inst, OpClass::Dio, &DistillOptions::default())
}

pub fn p_dio_catalytic_pure(inst: &CatalysisInstance) -> Result<CatalysisResult> {
    p_catalytic_pure(inst, OpClass::Dio, &DistillOptions::default())
}

/// Two-state families of the catalysis examples, `q a + (1-q) b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "v")]
    V,
    #[serde(rename = "u")]
    U,
}

impl Family {
    pub fn states(self) -> (PureState, PureState) {
        match self {
            Family::V => (
                example_state(ExampleState::V1),
                example_state(ExampleState::V2),
            ),
            Family::U => (
                example_state(ExampleState::U1),
                example_state(ExampleState::U2),
            ),
        }
    }

    pub fn density(self, q: f64) -> Result<HermitianOperator> {
        let (a, b) = self.states();
        mixture(q, &a, &b)
    }

    /// Range of `q` explored in the examples.
    pub fn q_range(self) -> (f64, f64) {
        match self {
            Family::V => (0.1, 0.5),
            Family::U => (0.2, 0.7),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::V => "v",
            Family::U => "u",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v" | "v_family" => Ok(Family::V),
            "u" | "u_family" => Ok(Family::U),
            _ => Err(Error::Parse(format!("unknown family '{s}' (v or u)"))),
        }
    }
}

/// One CSV row; field order is the CSV header.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: Family,
    pub q: f64,
    pub delta: f64,
    pub eps: f64,
    pub m: usize,
    pub p_assisted: f64,
    pub p_unassisted: f64,
    pub ratio: f64,
    pub gap: f64,
    pub status: String,
}

#[derive(Clone, Debug, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

pub const SWEEP_HEADER: &str = "family,q,delta,eps,m,p_assisted,p_unassisted,ratio,gap,status";

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        if self.rows.is_empty() {
            return Ok(format!("{SWEEP_HEADER}\n"));
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn status_label(e: &Error) -> String {
    match e {
        Error::Solver { status, .. } => format!("{status:?}"),
        Error::Resource(_) => "ResourceLimit".into(),
        _ => "Error".into(),
    }
}

/// Assisted (maximally coherent catalyst `Ψ_2`) against unassisted DIO over
/// the grid. Cells run on the current rayon pool; rows come out ordered by
/// `q`, then `δ`. Failed cells carry `NaN` values and the failure status.
pub fn catalysis_sweep(
    family: Family,
    q_grid: &[f64],
    delta_grid: &[f64],
    m: usize,
    eps: f64,
) -> Result<SweepTable> {
    let mut table = SweepTable::default();
    let (lo, hi) = family.q_range();
    for &q in q_grid {
        if q < lo - 1e-12 || q > hi + 1e-12 {
            table.warnings.push(format!(
                "q = {q} lies outside the explored range [{lo}, {hi}] of family {family}"
            ));
        }
    }
    let catalyst = max_coherent(2)?;
    let opts = DistillOptions::default();
    let cells: Vec<(f64, f64)> = q_grid
        .iter()
        .flat_map(|&q| delta_grid.iter().map(move |&d| (q, d)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(q, delta)| {
            let res = family
                .density(q)
                .and_then(|rho| CatalysisInstance::new(rho, catalyst.clone(), m, eps, delta))
                .and_then(|inst| p_catalytic_mc(&inst, OpClass::Dio, &opts));
            let base = SweepRow {
                family,
                q,
                delta,
                eps,
                m,
                p_assisted: f64::NAN,
                p_unassisted: f64::NAN,
                ratio: f64::NAN,
                gap: f64::NAN,
                status: String::new(),
            };
            match res {
                Ok(r) => SweepRow {
                    p_assisted: r.probability,
                    p_unassisted: r.unassisted,
                    ratio: r.enhancement_ratio,
                    gap: r.gap,
                    status: format!("{:?}", r.status),
                    ..base
                },
                Err(e) => SweepRow {
                    status: status_label(&e),
                    ..base
                },
            }
        })
        .collect();
    table.rows = rows;
    Ok(table)
}

/// Density of `psi` zero-padded to dimension `d`.
pub fn padded_density(psi: &PureState, d: usize) -> Result<HermitianOperator> {
    if d < psi.dim() {
        return domain(format!("cannot pad a dimension-{} state to {d}", psi.dim()));
    }
    let mut mat = DMatrix::<C64>::zeros(d, d);
    let rho = psi.density();
    for i in 0..psi.dim() {
        for j in 0..psi.dim() {
            mat[(i, j)] = rho.get(i, j);
        }
    }
    HermitianOperator::new(mat)
}

#[cfg(test)]
mod tests;
