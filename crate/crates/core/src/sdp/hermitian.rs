//! Complex Hermitian programs and their reduction to real conic form.
//!
//! A Hermitian PSD variable `X = x + iξ` (x symmetric, ξ antisymmetric) is
//! either kept as the real matrix `x` when no functional touches `ξ`, or
//! replaced by the real PSD matrix `Y = [[x, -ξ], [ξ, x]]` of twice the size.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{BlockValue, Cone, ConicProgram, LinearMap};
use crate::error::{domain, Result};
use crate::linalg::{HermitianOperator, C64};

/// `c · X_pq` on a PSD block, or `c · x_p` on a nonnegative block (`p == q`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub block: usize,
    pub p: usize,
    pub q: usize,
    pub coef: C64,
}

/// A real functional `X -> Re Σ c · X_pq`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HermitianMap {
    terms: Vec<Term>,
}

impl HermitianMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entry(&mut self, block: usize, p: usize, q: usize, coef: C64) -> &mut Self {
        self.terms.push(Term { block, p, q, coef });
        self
    }

    pub fn scalar(&mut self, block: usize, k: usize, coef: f64) -> &mut Self {
        self.entry(block, k, k, C64::new(coef, 0.0))
    }

    /// Adds `scale · tr(A X)`.
    pub fn trace_with(&mut self, block: usize, a: &HermitianOperator, scale: f64) -> &mut Self {
        let m = a.matrix();
        for p in 0..m.nrows() {
            for q in 0..m.ncols() {
                let v = m[(q, p)];
                if v != C64::new(0.0, 0.0) {
                    self.entry(block, p, q, v * scale);
                }
            }
        }
        self
    }

    pub fn extend(&mut self, terms: impl IntoIterator<Item = Term>) -> &mut Self {
        self.terms.extend(terms);
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, x: &[HermitianValue]) -> f64 {
        self.terms
            .iter()
            .map(|t| match &x[t.block] {
                HermitianValue::Psd(h) => (t.coef * h.get(t.p, t.q)).re,
                HermitianValue::Nonneg(v) => t.coef.re * v[t.p],
            })
            .sum()
    }
}

/// A conic program over Hermitian PSD blocks and nonnegative orthants.
#[derive(Clone, Debug, Default)]
pub struct HermitianProgram {
    cones: Vec<Cone>,
    objective: HermitianMap,
    constraints: Vec<(HermitianMap, f64)>,
}

impl HermitianProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an `n × n` Hermitian PSD block and returns its index.
    pub fn add_psd(&mut self, n: usize) -> usize {
        self.cones.push(Cone::Psd(n));
        self.cones.len() - 1
    }

    pub fn add_nonneg(&mut self, k: usize) -> usize {
        self.cones.push(Cone::Nonneg(k));
        self.cones.len() - 1
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn constraints(&self) -> &[(HermitianMap, f64)] {
        &self.constraints
    }

    pub fn objective(&self) -> &HermitianMap {
        &self.objective
    }

    /// Objective to maximize.
    pub fn set_objective(&mut self, map: HermitianMap) {
        self.objective = map;
    }

    pub fn add_constraint(&mut self, map: HermitianMap, rhs: f64) {
        self.constraints.push((map, rhs));
    }

    /// Replaces PSD block `block` (side `n`) by `X = B X̂ B†` with `X̂` of side
    /// `B.ncols()`, rewriting every functional as `Bᵀ A B̄`. Used to restrict a
    /// variable to a face of the cone known to contain every feasible point.
    pub fn restrict_psd(&mut self, block: usize, basis: &DMatrix<C64>) -> Result<()> {
        let n = match self.cones.get(block) {
            Some(Cone::Psd(n)) => *n,
            _ => return domain(format!("block {block} is not a PSD block")),
        };
        if basis.nrows() != n {
            return domain(format!(
                "basis has {} rows for a block of side {n}",
                basis.nrows()
            ));
        }
        let k = basis.ncols();
        self.cones[block] = Cone::Psd(k);
        let bt = basis.transpose();
        let bc = basis.conjugate();
        let rewrite = |map: &mut HermitianMap| {
            let mut a = DMatrix::<C64>::zeros(n, n);
            let mut touched = false;
            map.terms.retain(|t| {
                if t.block == block {
                    a[(t.p, t.q)] += t.coef;
                    touched = true;
                    false
                } else {
                    true
                }
            });
            if !touched {
                return;
            }
            let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let ah = &bt * a * &bc;
            for p in 0..k {
                for q in 0..k {
                    let coef = ah[(p, q)];
                    if coef.norm() > 1e-14 * scale {
                        map.terms.push(Term { block, p, q, coef });
                    }
                }
            }
        };
        for (map, _) in &mut self.constraints {
            rewrite(map);
        }
        rewrite(&mut self.objective);
        Ok(())
    }

    /// Adds the matrix equation `L(X) = rhs`, where `expr(p, q)` lists the
    /// terms of the `(p, q)` entry of the Hermitian-valued map `L`. One row
    /// per real diagonal entry and two per upper off-diagonal entry.
    pub fn add_matrix_equation(
        &mut self,
        rhs: &HermitianOperator,
        mut expr: impl FnMut(usize, usize) -> Vec<Term>,
    ) {
        let n = rhs.dim();
        for p in 0..n {
            for q in p..n {
                let terms = expr(p, q);
                let r = rhs.get(p, q);
                let mut re = HermitianMap::new();
                re.extend(terms.iter().copied());
                self.add_constraint(re, r.re);
                if p != q {
                    let mut im = HermitianMap::new();
                    im.extend(terms.iter().map(|t| Term {
                        coef: t.coef * C64::new(0.0, -1.0),
                        ..*t
                    }));
                    self.add_constraint(im, r.im);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmbeddingMode {
    /// Real restriction whenever no functional reads an imaginary part.
    #[default]
    Auto,
    ForceDoubled,
}

/// Value of one block of a Hermitian program.
#[derive(Clone, Debug, PartialEq)]
pub enum HermitianValue {
    Psd(HermitianOperator),
    Nonneg(Vec<f64>),
}

impl HermitianValue {
    pub fn as_psd(&self) -> Option<&HermitianOperator> {
        match self {
            HermitianValue::Psd(h) => Some(h),
            HermitianValue::Nonneg(_) => None,
        }
    }

    pub fn as_nonneg(&self) -> Option<&[f64]> {
        match self {
            HermitianValue::Nonneg(v) => Some(v),
            HermitianValue::Psd(_) => None,
        }
    }
}

/// Real program together with the information needed to map solutions back.
#[derive(Clone, Debug)]
pub struct Embedded {
    pub program: ConicProgram,
    pub doubled: bool,
    cones: Vec<Cone>,
}

impl Embedded {
    pub fn recover(&self, x: &[BlockValue]) -> Vec<HermitianValue> {
        self.cones
            .iter()
            .zip(x)
            .map(|(&cone, v)| match (cone, v) {
                (Cone::Psd(n), BlockValue::Psd(y)) => {
                    let m = if self.doubled {
                        DMatrix::from_fn(n, n, |p, q| {
                            C64::new(
                                0.5 * (y[(p, q)] + y[(n + p, n + q)]),
                                0.5 * (y[(n + p, q)] - y[(p, n + q)]),
                            )
                        })
                    } else {
                        y.map(|v| C64::new(v, 0.0))
                    };
                    let m = (&m + m.adjoint()).scale(0.5);
                    HermitianValue::Psd(HermitianOperator::from_hermitian_unchecked(m))
                }
                (Cone::Nonneg(_), BlockValue::Nonneg(v)) => {
                    HermitianValue::Nonneg(v.iter().copied().collect())
                }
                _ => unreachable!(),
            })
            .collect()
    }
}

type Key = (usize, usize, usize);

/// Real-part and imaginary-part coefficients: the functional equals
/// `Σ xs[k] · Re X_k + Σ xi[k] · Im X_k` over upper-triangular keys.
fn split(map: &HermitianMap, cones: &[Cone]) -> Result<(BTreeMap<Key, f64>, BTreeMap<Key, f64>)> {
    let mut xs = BTreeMap::new();
    let mut xi = BTreeMap::new();
    for t in &map.terms {
        let Some(&cone) = cones.get(t.block) else {
            return domain(format!("term refers to missing block {}", t.block));
        };
        match cone {
            Cone::Nonneg(k) => {
                if t.p != t.q || t.p >= k {
                    return domain(format!("invalid nonnegative term {t:?}"));
                }
                *xs.entry((t.block, t.p, t.p)).or_insert(0.0) += t.coef.re;
            }
            Cone::Psd(n) => {
                if t.p >= n || t.q >= n {
                    return domain(format!("term {t:?} out of range for block of size {n}"));
                }
                let (p, q) = (t.p.min(t.q), t.p.max(t.q));
                *xs.entry((t.block, p, q)).or_insert(0.0) += t.coef.re;
                if p != q {
                    // X_pq = x + iξ, X_qp = x - iξ
                    let s = if t.p < t.q { -t.coef.im } else { t.coef.im };
                    *xi.entry((t.block, p, q)).or_insert(0.0) += s;
                }
            }
        }
    }
    xs.retain(|_, v| *v != 0.0);
    xi.retain(|_, v| *v != 0.0);
    Ok((xs, xi))
}

pub fn embed_hermitian(hp: &HermitianProgram, mode: EmbeddingMode) -> Result<Embedded> {
    let cones = hp.cones.clone();
    let (obj_x, obj_xi) = split(&hp.objective, &cones)?;
    let rows = hp
        .constraints
        .iter()
        .map(|(m, b)| Ok((split(m, &cones)?, *b)))
        .collect::<Result<Vec<_>>>()?;
    let real = mode == EmbeddingMode::Auto
        && obj_xi.is_empty()
        && rows
            .iter()
            .all(|((xs, xi), b)| xi.is_empty() || (xs.is_empty() && *b == 0.0));

    let build = |xs: &BTreeMap<Key, f64>, xi: &BTreeMap<Key, f64>| -> LinearMap {
        let mut lm = LinearMap::new();
        for (&(b, p, q), &v) in xs {
            match cones[b] {
                Cone::Nonneg(_) => {
                    lm.lin(b, p, v);
                }
                Cone::Psd(n) => {
                    let diag = p == q;
                    if real {
                        lm.sym(b, p, q, if diag { v } else { v / 2.0 });
                    } else {
                        let f = if diag { v / 2.0 } else { v / 4.0 };
                        lm.sym(b, p, q, f);
                        lm.sym(b, n + p, n + q, f);
                    }
                }
            }
        }
        if !real {
            for (&(b, p, q), &v) in xi {
                let Cone::Psd(n) = cones[b] else {
                    unreachable!()
                };
                // ξ_pq = (Y[n+p, q] - Y[p, n+q]) / 2
                lm.sym(b, q, n + p, v / 4.0);
                lm.sym(b, p, n + q, -v / 4.0);
            }
        }
        lm
    };

    let blocks: Vec<Cone> = cones
        .iter()
        .map(|&c| match c {
            Cone::Psd(n) if !real => Cone::Psd(2 * n),
            other => other,
        })
        .collect();
    let mut program = ConicProgram::new(blocks);
    program.set_objective(build(&obj_x, &obj_xi));
    for ((xs, xi), b) in &rows {
        program.add_constraint(build(xs, xi), *b);
    }
    Ok(Embedded {
        program,
        doubled: !real,
        cones,
    })
}
