//! Small dense semidefinite programs.
//!
//! A [`ConicProgram`] is stored in the primal standard form
//!
//! ```text
//!   maximize  <C, X>
//!   s.t.      <A_i, X> = b_i,   X = (X_1, ..., X_k),  X_j in K_j
//! ```
//!
//! where every `K_j` is either a real PSD cone or a nonnegative orthant.
//! Its dual is `minimize b'y  s.t.  S = Σ y_i A_i - C ⪰ 0`.
//! Complex Hermitian programs are written with [`HermitianProgram`] and
//! reduced to this real form by [`embed_hermitian`].

mod hermitian;
mod presolve;
mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{domain, Result};

pub use hermitian::{
    embed_hermitian, Embedded, EmbeddingMode, HermitianMap, HermitianProgram, HermitianValue, Term,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// Real symmetric `n × n` PSD cone.
    Psd(usize),
    /// Nonnegative orthant of length `k`.
    Nonneg(usize),
}

impl Cone {
    pub fn size(self) -> usize {
        match self {
            Cone::Psd(n) | Cone::Nonneg(n) => n,
        }
    }
}

/// One coefficient of a linear functional. On PSD blocks `row <= col` and the
/// value is placed at both `(row, col)` and `(col, row)`; on nonnegative
/// blocks `row == col` is the vector index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    /// Multiplicity of the entry in a Frobenius inner product.
    #[inline]
    pub(crate) fn weight(&self) -> f64 {
        if self.row == self.col {
            1.0
        } else {
            2.0
        }
    }
}

/// A sparse linear functional `X -> <A, X>`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearMap {
    entries: Vec<Entry>,
}

impl LinearMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(i, j)` and `(j, i)` of the coefficient on a PSD block.
    pub fn sym(&mut self, block: usize, i: usize, j: usize, value: f64) -> &mut Self {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push(Entry {
            block,
            row,
            col,
            value,
        });
        self
    }

    /// Adds `value * x_k` on a nonnegative block.
    pub fn lin(&mut self, block: usize, k: usize, value: f64) -> &mut Self {
        self.entries.push(Entry {
            block,
            row: k,
            col: k,
            value,
        });
        self
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts, merges duplicates and drops exact zeros.
    pub(crate) fn canonicalize(&mut self) {
        self.entries.sort_by_key(|e| (e.block, e.row, e.col));
        let mut merged: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => {
                    last.value += e.value
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }

    /// Frobenius norm of the full coefficient.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.weight() * e.value * e.value)
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, x: &[BlockValue]) -> f64 {
        self.entries
            .iter()
            .map(|e| match &x[e.block] {
                BlockValue::Psd(m) => e.weight() * e.value * m[(e.row, e.col)],
                BlockValue::Nonneg(v) => e.value * v[e.row],
            })
            .sum()
    }

    /// Dense coefficient of one block.
    pub fn dense_block(&self, block: usize, cone: Cone) -> BlockValue {
        let mut out = BlockValue::zeros(cone);
        for e in self.entries.iter().filter(|e| e.block == block) {
            match &mut out {
                BlockValue::Psd(m) => {
                    m[(e.row, e.col)] += e.value;
                    if e.row != e.col {
                        m[(e.col, e.row)] += e.value;
                    }
                }
                BlockValue::Nonneg(v) => v[e.row] += e.value,
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub map: LinearMap,
    pub rhs: f64,
}

/// A value living in one cone block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockValue {
    Psd(DMatrix<f64>),
    Nonneg(DVector<f64>),
}

impl BlockValue {
    pub fn zeros(cone: Cone) -> Self {
        match cone {
            Cone::Psd(n) => BlockValue::Psd(DMatrix::zeros(n, n)),
            Cone::Nonneg(k) => BlockValue::Nonneg(DVector::zeros(k)),
        }
    }

    pub fn scaled_identity(cone: Cone, tau: f64) -> Self {
        match cone {
            Cone::Psd(n) => BlockValue::Psd(DMatrix::identity(n, n).scale(tau)),
            Cone::Nonneg(k) => BlockValue::Nonneg(DVector::from_element(k, tau)),
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        match (self, other) {
            (BlockValue::Psd(a), BlockValue::Psd(b)) => a.dot(b),
            (BlockValue::Nonneg(a), BlockValue::Nonneg(b)) => a.dot(b),
            _ => panic!("block kind mismatch"),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        match self {
            BlockValue::Psd(a) => a.norm_squared(),
            BlockValue::Nonneg(a) => a.norm_squared(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        match (self, other) {
            (BlockValue::Psd(a), BlockValue::Psd(b)) => *a += b.scale(alpha),
            (BlockValue::Nonneg(a), BlockValue::Nonneg(b)) => a.axpy(alpha, b, 1.0),
            _ => panic!("block kind mismatch"),
        }
    }

    pub fn as_psd(&self) -> Option<&DMatrix<f64>> {
        match self {
            BlockValue::Psd(m) => Some(m),
            BlockValue::Nonneg(_) => None,
        }
    }

    pub fn as_nonneg(&self) -> Option<&DVector<f64>> {
        match self {
            BlockValue::Nonneg(v) => Some(v),
            BlockValue::Psd(_) => None,
        }
    }

    /// Smallest eigenvalue (PSD) or entry (orthant).
    pub fn min_cone_value(&self) -> f64 {
        match self {
            BlockValue::Psd(m) if m.nrows() == 0 => 0.0,
            BlockValue::Psd(m) => m.clone().symmetric_eigenvalues().min(),
            BlockValue::Nonneg(v) if v.is_empty() => 0.0,
            BlockValue::Nonneg(v) => v.min(),
        }
    }
}

/// A real conic program in primal standard form (maximization).
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    blocks: Vec<Cone>,
    objective: LinearMap,
    constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(blocks: Vec<Cone>) -> Self {
        Self {
            blocks,
            objective: LinearMap::new(),
            constraints: Vec::new(),
        }
    }

    pub fn blocks(&self) -> &[Cone] {
        &self.blocks
    }

    pub fn objective(&self) -> &LinearMap {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, mut map: LinearMap) {
        map.canonicalize();
        self.objective = map;
    }

    pub fn add_constraint(&mut self, mut map: LinearMap, rhs: f64) {
        map.canonicalize();
        self.constraints.push(Constraint { map, rhs });
    }

    /// Structural checks: indices in range, PSD entries upper-triangular,
    /// at least one constraint.
    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return domain("conic program needs at least one constraint");
        }
        let check = |map: &LinearMap| -> Result<()> {
            for e in map.entries() {
                let Some(&cone) = self.blocks.get(e.block) else {
                    return domain(format!("entry refers to missing block {}", e.block));
                };
                let ok = match cone {
                    Cone::Psd(n) => e.row <= e.col && e.col < n,
                    Cone::Nonneg(k) => e.row == e.col && e.row < k,
                };
                if !ok || !e.value.is_finite() {
                    return domain(format!("invalid entry {e:?} for cone {cone:?}"));
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            check(&c.map)?;
            if !c.rhs.is_finite() {
                return domain("constraint right-hand side is not finite");
            }
        }
        Ok(())
    }

    pub fn zero_point(&self) -> Vec<BlockValue> {
        self.blocks.iter().map(|&c| BlockValue::zeros(c)).collect()
    }

    /// Dense dump for external cross-checking.
    ///
    /// ```json
    /// { "blocks": [{"kind": "psd", "size": n} | {"kind": "nonneg", "size": k}],
    ///   "objective": [[row-major block entries], ...],
    ///   "constraints": [{"coefficients": [[...], ...], "rhs": b}] }
    /// ```
    pub fn to_json(&self) -> serde_json::Value {
        let dense = |map: &LinearMap| -> Vec<Vec<f64>> {
            self.blocks
                .iter()
                .enumerate()
                .map(|(b, &cone)| match map.dense_block(b, cone) {
                    BlockValue::Psd(m) => m.transpose().iter().copied().collect(),
                    BlockValue::Nonneg(v) => v.iter().copied().collect(),
                })
                .collect()
        };
        let blocks: Vec<_> = self
            .blocks
            .iter()
            .map(|c| match c {
                Cone::Psd(n) => json!({"kind": "psd", "size": n}),
                Cone::Nonneg(k) => json!({"kind": "nonneg", "size": k}),
            })
            .collect();
        let constraints: Vec<_> = self
            .constraints
            .iter()
            .map(|c| json!({"coefficients": dense(&c.map), "rhs": c.rhs}))
            .collect();
        json!({
            "blocks": blocks,
            "objective": dense(&self.objective),
            "constraints": constraints,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Primal/dual pair returned by [`solve`].
#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// `<C, X>`
    pub primal_value: f64,
    /// `b'y`
    pub dual_value: f64,
    pub x: Vec<BlockValue>,
    pub y: DVector<f64>,
    /// Dual slack `Σ y_i A_i - C`.
    pub s: Vec<BlockValue>,
    /// `|primal - dual| / (1 + |primal| + |dual|)`
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    /// Human-readable reason for a non-optimal status.
    pub message: String,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Primal-dual path following with Nesterov-Todd scaling and Mehrotra
/// predictor-corrector steps. Deterministic: same input, same bits out.
pub fn solve(program: &ConicProgram, opts: &SolveOptions) -> ConicSolution {
    solver::solve(program, opts)
}

/// Residuals recomputed from scratch with dense coefficient matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    /// `‖A(X) - b‖₂ / (1 + ‖b‖₂)`
    pub primal_residual: f64,
    /// `‖Σ y_i A_i - C - S‖_F / (1 + ‖C‖_F)`
    pub dual_residual: f64,
    pub gap: f64,
    /// Largest negative eigenvalue (or entry) over all primal and dual blocks, as a positive number.
    pub psd_defects: f64,
}

impl CertificateReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual
            .max(self.dual_residual)
            .max(self.gap)
            .max(self.psd_defects)
    }
}

pub fn check_certificate(program: &ConicProgram, sol: &ConicSolution) -> CertificateReport {
    let blocks = program.blocks();
    let dense_inner = |map: &LinearMap, x: &[BlockValue]| -> f64 {
        blocks
            .iter()
            .enumerate()
            .map(|(b, &cone)| map.dense_block(b, cone).inner(&x[b]))
            .sum()
    };

    let mut r2 = 0.0;
    let mut b2 = 0.0;
    for c in program.constraints() {
        let ax = dense_inner(&c.map, &sol.x);
        r2 += (ax - c.rhs).powi(2);
        b2 += c.rhs * c.rhs;
    }
    let primal_residual = r2.sqrt() / (1.0 + b2.sqrt());

    let mut c_norm2 = 0.0;
    let mut d2 = 0.0;
    for (b, &cone) in blocks.iter().enumerate() {
        let obj = program.objective().dense_block(b, cone);
        c_norm2 += obj.norm_squared();
        let mut resid = BlockValue::zeros(cone);
        for (c, &yi) in program.constraints().iter().zip(sol.y.iter()) {
            resid.axpy(yi, &c.map.dense_block(b, cone));
        }
        resid.axpy(-1.0, &obj);
        resid.axpy(-1.0, &sol.s[b]);
        d2 += resid.norm_squared();
    }
    let dual_residual = d2.sqrt() / (1.0 + c_norm2.sqrt());

    let pobj = dense_inner(program.objective(), &sol.x);
    let dobj: f64 = program
        .constraints()
        .iter()
        .zip(sol.y.iter())
        .map(|(c, y)| c.rhs * y)
        .sum();
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

    let psd_defects = sol
        .x
        .iter()
        .chain(sol.s.iter())
        .map(|v| (-v.min_cone_value()).max(0.0))
        .fold(0.0, f64::max);

    CertificateReport {
        primal_residual,
        dual_residual,
        gap,
        psd_defects,
    }
}

#[cfg(test)]
mod tests;
