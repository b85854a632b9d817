//! Program builders. Every builder returns a maximization problem; the
//! dual routes negate their minimization objective.

use nalgebra::DMatrix;

use crate::linalg::{c, eigh, r, HermitianOperator, C64};
use crate::sdp::{HermitianMap, HermitianProgram, Term};

pub(crate) fn term(block: usize, p: usize, q: usize, coef: f64) -> Term {
    Term {
        block,
        p,
        q,
        coef: r(coef),
    }
}

const RANK_TOL: f64 = 1e-10;

/// Orthonormal bases `(support, kernel)` of a PSD operator, eigenvalues at or
/// below `1e-10` counting as zero. Real input gives real bases.
pub(crate) fn spectral_split(h: &HermitianOperator) -> (DMatrix<C64>, DMatrix<C64>) {
    let d = h.dim();
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if h.is_real() {
        let e = h.matrix().map(|z| z.re).symmetric_eigen();
        (
            e.eigenvalues.iter().copied().collect(),
            e.eigenvectors.map(r),
        )
    } else {
        let e = eigh(h);
        (e.values.iter().copied().collect(), e.vectors)
    };
    let pick = |cols: Vec<usize>| DMatrix::from_fn(d, cols.len(), |i, k| vectors[(i, cols[k])]);
    let (sup, ker): (Vec<usize>, Vec<usize>) = (0..d).partition(|&i| values[i] > RANK_TOL);
    (pick(sup), pick(ker))
}

/// Orthonormal basis of `ker ρ` as columns, `None` when `ρ` has full rank.
pub(crate) fn kernel_basis(rho: &HermitianOperator) -> Option<DMatrix<C64>> {
    let (_, ker) = spectral_split(rho);
    (ker.ncols() > 0).then_some(ker)
}

/// Face of the Choi cone containing every `J ⪰ 0` with `ℰ(σ) ∝ out`-shaped
/// outputs: `ℰ(σ)` supported on `supp(out)` forces `J (u ⊗ w) = 0` for
/// `u ∈ supp σ̄`, `w ∈ ker out`. Returns a basis of the orthogonal
/// complement of those vectors, `None` when `out` has full rank.
pub(crate) fn choi_face(
    sigma: &HermitianOperator,
    out: &HermitianOperator,
) -> Option<DMatrix<C64>> {
    let (_, ker) = spectral_split(out);
    if ker.ncols() == 0 {
        return None;
    }
    let (sup, _) = spectral_split(&sigma.transpose());
    let f = sup.kronecker(&ker);
    let proj = HermitianOperator::from_hermitian_unchecked(&f * f.adjoint());
    kernel_basis(&proj)
}

/// `κ = λ_max((Δρ)^{-1/2} ρ (Δρ)^{-1/2})` bounds `tr Cρ / tr Δ(C)ρ` over
/// `C ⪰ 0`. When `m(1-ε) = κ` the DIO fidelity row `tr Cρ ≥ m(1-ε) tr Δ(C)ρ`
/// holds only with equality, which confines `C` to `ker(κΔ(ρ) - ρ)`.
/// Returns a basis of that face there, `None` elsewhere.
pub(crate) fn fidelity_face(rho: &HermitianOperator, m: usize, eps: f64) -> Option<DMatrix<C64>> {
    let d = rho.dim();
    let idx: Vec<usize> = (0..d).filter(|&i| rho.get(i, i).re > RANK_TOL).collect();
    let k = DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
        let (i, j) = (idx[a], idx[b]);
        rho.get(i, j) / (rho.get(i, i).re * rho.get(j, j).re).sqrt()
    });
    let kappa = HermitianOperator::from_hermitian_unchecked(k).max_eigenvalue();
    let level = m as f64 * (1.0 - eps);
    if (level - kappa).abs() > 1e-9 * kappa.max(1.0) {
        return None;
    }
    let h = crate::linalg::dephase(rho).scale(kappa).sub(rho);
    let (_, ker) = spectral_split(&h);
    (ker.ncols() > 0 && ker.ncols() < d).then_some(ker)
}

/// `V W V†` for a block `W` on the columns of `v`.
pub(crate) fn lift(v: &DMatrix<C64>, w: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_hermitian_unchecked(v * w.matrix() * v.adjoint())
}

/// Terms of `scale·(V W V†)_pq`.
fn lifted_terms(block: usize, v: &DMatrix<C64>, p: usize, q: usize, scale: f64) -> Vec<Term> {
    let k = v.ncols();
    let mut out = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let coef = v[(p, a)] * v[(q, b)].conj() * scale;
            if coef.norm() > 1e-15 {
                out.push(Term {
                    block,
                    p: a,
                    q: b,
                    coef,
                });
            }
        }
    }
    out
}

/// `G - C`: either its own block, or `V W V†` with `V` spanning `ker ρ`.
/// At `ε = 0` the fidelity row forces `tr (G - C)ρ = 0`; substituting the
/// kernel form removes that row and gives the program an interior point.
pub(crate) enum Excess {
    Full,
    Kernel(DMatrix<C64>),
}

impl Excess {
    pub(crate) fn for_instance(rho: &HermitianOperator, eps: f64) -> Self {
        if eps == 0.0 {
            if let Some(v) = kernel_basis(rho) {
                return Excess::Kernel(v);
            }
        }
        Excess::Full
    }

    fn side(&self, d: usize) -> usize {
        match self {
            Excess::Full => d,
            Excess::Kernel(v) => v.ncols(),
        }
    }

    fn terms(&self, block: usize, p: usize, q: usize, scale: f64) -> Vec<Term> {
        match self {
            Excess::Full => vec![term(block, p, q, scale)],
            Excess::Kernel(v) => lifted_terms(block, v, p, q, scale),
        }
    }

    /// Full `d × d` operator from the solved block.
    pub(crate) fn expand(&self, w: &HermitianOperator) -> HermitianOperator {
        match self {
            Excess::Full => w.clone(),
            Excess::Kernel(v) => lift(v, w),
        }
    }
}

/// Block indices of the compact primals: `C`, `S1 = G - C`, `S2 = 1 - G`.
pub(crate) struct CompactBlocks {
    pub c: usize,
    pub s1: usize,
    pub s2: Option<usize>,
}

/// `max tr Gρ` over `0 ≤ C ≤ G ≤ 1`, `Δ(G) = mΔ(C)`, `tr Cρ ≥ (1-ε) tr Gρ`,
/// with `G = C + S1`. `diagonal_g` adds `G = Δ(G)`.
pub(crate) fn mio_primal(
    rho: &HermitianOperator,
    m: usize,
    eps: f64,
    diagonal_g: bool,
    excess: &Excess,
) -> (HermitianProgram, CompactBlocks) {
    let d = rho.dim();
    let mf = m as f64;
    let mut hp = HermitianProgram::new();
    let cb = hp.add_psd(d);
    let s1 = hp.add_psd(excess.side(d));
    let s2 = hp.add_psd(d);

    hp.add_matrix_equation(&HermitianOperator::identity(d), |p, q| {
        let mut t = vec![term(cb, p, q, 1.0), term(s2, p, q, 1.0)];
        t.extend(excess.terms(s1, p, q, 1.0));
        t
    });
    for i in 0..d {
        let mut row = HermitianMap::new();
        row.entry(cb, i, i, r(1.0 - mf))
            .extend(excess.terms(s1, i, i, 1.0));
        hp.add_constraint(row, 0.0);
    }
    if diagonal_g {
        for p in 0..d {
            for q in p + 1..d {
                for phase in [c(1.0, 0.0), c(0.0, -1.0)] {
                    let mut row = HermitianMap::new();
                    row.entry(cb, p, q, phase)
                        .extend(excess.terms(s1, p, q, 1.0).into_iter().map(|t| Term {
                            coef: t.coef * phase,
                            ..t
                        }));
                    hp.add_constraint(row, 0.0);
                }
            }
        }
    }
    let mut obj = HermitianMap::new();
    obj.trace_with(cb, rho, 1.0);
    if let Excess::Full = excess {
        let slack = hp.add_nonneg(1);
        let mut fid = HermitianMap::new();
        fid.trace_with(cb, rho, eps)
            .trace_with(s1, rho, -(1.0 - eps))
            .scalar(slack, 0, -1.0);
        hp.add_constraint(fid, 0.0);
        obj.trace_with(s1, rho, 1.0);
    }
    hp.set_objective(obj);
    (
        hp,
        CompactBlocks {
            c: cb,
            s1,
            s2: Some(s2),
        },
    )
}

/// `max m tr Δ(C)ρ` over `0 ≤ C ≤ mΔ(C) ≤ 1`, `tr Cρ ≥ m(1-ε) tr Δ(C)ρ`.
/// With `face = Some(B)` (see [`fidelity_face`]) the fidelity row is
/// dropped and `C = B Ĉ B†`; the `c` block then holds `Ĉ`.
pub(crate) fn dio_primal(
    rho: &HermitianOperator,
    m: usize,
    eps: f64,
    excess: &Excess,
    face: Option<&DMatrix<C64>>,
) -> (HermitianProgram, CompactBlocks) {
    let d = rho.dim();
    let mf = m as f64;
    let mut hp = HermitianProgram::new();
    let cb = hp.add_psd(d);
    let s1 = hp.add_psd(excess.side(d));
    let s2 = hp.add_nonneg(d);

    // S1 = mΔ(C) - C
    hp.add_matrix_equation(&HermitianOperator::zeros(d), |p, q| {
        let mut t = excess.terms(s1, p, q, 1.0);
        t.push(term(cb, p, q, 1.0));
        if p == q {
            t.push(term(cb, p, p, -mf));
        }
        t
    });
    for i in 0..d {
        let mut row = HermitianMap::new();
        row.scalar(s2, i, 1.0).entry(cb, i, i, r(mf));
        hp.add_constraint(row, 1.0);
    }
    if matches!(excess, Excess::Full) && face.is_none() {
        let slack = hp.add_nonneg(1);
        let mut fid = HermitianMap::new();
        fid.trace_with(cb, rho, 1.0).scalar(slack, 0, -1.0);
        for i in 0..d {
            fid.entry(cb, i, i, r(-mf * (1.0 - eps) * rho.get(i, i).re));
        }
        hp.add_constraint(fid, 0.0);
    }

    let mut obj = HermitianMap::new();
    for i in 0..d {
        obj.entry(cb, i, i, r(mf * rho.get(i, i).re));
    }
    hp.set_objective(obj);
    if let Some(b) = face {
        hp.restrict_psd(cb, b)
            .expect("face basis matches the C block");
    }
    (
        hp,
        CompactBlocks {
            c: cb,
            s1,
            s2: None,
        },
    )
}

/// Negated MIO dual: `max -tr X` with the free diagonal `Z` eliminated.
///
/// ```text
/// T1 = X - Y - Δ(Z) - (1 - λ(1-ε))ρ ⪰ 0
/// T2 = Y + mΔ(Z) - λρ ⪰ 0
/// ```
pub(crate) fn mio_dual(
    rho: &HermitianOperator,
    m: usize,
    eps: f64,
    excess: &Excess,
) -> HermitianProgram {
    if let Excess::Kernel(v) = excess {
        return mio_dual_kernel(rho, m, v);
    }
    let d = rho.dim();
    let mf = m as f64;
    let mut hp = HermitianProgram::new();
    let x = hp.add_psd(d);
    let y = hp.add_psd(d);
    let t1 = hp.add_psd(d);
    let t2 = hp.add_psd(d);
    let lam = hp.add_nonneg(1);

    let lam_term = |coef| Term {
        block: lam,
        p: 0,
        q: 0,
        coef,
    };
    // Off-diagonal parts of both inequalities. The diagonal rows come out
    // empty with rhs 0 and are dropped by presolve.
    let off_rho = HermitianOperator::from_hermitian_unchecked(DMatrix::from_fn(d, d, |p, q| {
        if p == q {
            r(0.0)
        } else {
            -rho.get(p, q)
        }
    }));
    hp.add_matrix_equation(&off_rho, |p, q| {
        if p == q {
            return vec![];
        }
        vec![
            term(t1, p, q, 1.0),
            term(x, p, q, -1.0),
            term(y, p, q, 1.0),
            lam_term(rho.get(p, q) * -(1.0 - eps)),
        ]
    });
    hp.add_matrix_equation(&HermitianOperator::zeros(d), |p, q| {
        if p == q {
            return vec![];
        }
        vec![
            term(t2, p, q, 1.0),
            term(y, p, q, -1.0),
            lam_term(rho.get(p, q)),
        ]
    });
    // diagonal of T2 after substituting z_i from the diagonal of T1
    for i in 0..d {
        let rii = rho.get(i, i).re;
        let mut row = HermitianMap::new();
        row.entry(t2, i, i, r(1.0))
            .entry(y, i, i, r(mf - 1.0))
            .entry(x, i, i, r(-mf))
            .entry(t1, i, i, r(mf))
            .scalar(lam, 0, rii * (1.0 - mf * (1.0 - eps)));
        hp.add_constraint(row, -mf * rii);
    }

    let mut obj = HermitianMap::new();
    obj.trace_with(x, &HermitianOperator::identity(d), -1.0);
    hp.set_objective(obj);
    hp
}

/// Negated DIO dual: `max -Σ x_i` with
/// `T = -(mΔ(ρ) + mΔ(Y) - Y - m diag(x) + λ(ρ - m(1-ε)Δ(ρ))) ⪰ 0`.
pub(crate) fn dio_dual(
    rho: &HermitianOperator,
    m: usize,
    eps: f64,
    excess: &Excess,
) -> HermitianProgram {
    if let Excess::Kernel(v) = excess {
        return dio_dual_kernel(rho, m, v);
    }
    let d = rho.dim();
    let mf = m as f64;
    let mut hp = HermitianProgram::new();
    let x = hp.add_nonneg(d);
    let y = hp.add_psd(d);
    let t = hp.add_psd(d);
    let lam = hp.add_nonneg(1);

    let rhs =
        HermitianOperator::diagonal(&(0..d).map(|i| -mf * rho.get(i, i).re).collect::<Vec<_>>());
    hp.add_matrix_equation(&rhs, |p, q| {
        let mut v = vec![term(t, p, q, 1.0), term(y, p, q, -1.0)];
        let mut lc = rho.get(p, q);
        if p == q {
            v.push(term(y, p, p, mf));
            v.push(term(x, p, p, -mf));
            lc -= r(mf * (1.0 - eps) * rho.get(p, p).re);
        }
        v.push(Term {
            block: lam,
            p: 0,
            q: 0,
            coef: lc,
        });
        v
    });

    let mut obj = HermitianMap::new();
    for i in 0..d {
        obj.scalar(x, i, -1.0);
    }
    hp.set_objective(obj);
    hp
}

/// `Σ_i V̄_ia V_ib ρ_ii · scale` as a `k × k` matrix.
fn kernel_diag_rhs(rho: &HermitianOperator, v: &DMatrix<C64>, scale: f64) -> HermitianOperator {
    let k = v.ncols();
    let mat = DMatrix::from_fn(k, k, |a, b| {
        (0..rho.dim())
            .map(|i| v[(i, a)].conj() * v[(i, b)] * rho.get(i, i).re)
            .sum::<C64>()
            * scale
    });
    HermitianOperator::from_hermitian_unchecked(mat)
}

/// Dual of the `ε = 0` kernel-reduced MIO primal, negated: `max -tr X` with
/// `T = X + (1-m)Δ(z) - ρ ⪰ 0`, `U = V†(X + Δ(z))V ⪰ 0`, `z` eliminated
/// through the diagonal of `T`.
fn mio_dual_kernel(rho: &HermitianOperator, m: usize, v: &DMatrix<C64>) -> HermitianProgram {
    let d = rho.dim();
    let k = v.ncols();
    let inv = 1.0 / (m as f64 - 1.0);
    let mut hp = HermitianProgram::new();
    let x = hp.add_psd(d);
    let t = hp.add_psd(d);
    let u = hp.add_psd(k);

    let off_rho = HermitianOperator::from_hermitian_unchecked(DMatrix::from_fn(d, d, |p, q| {
        if p == q {
            r(0.0)
        } else {
            -rho.get(p, q)
        }
    }));
    hp.add_matrix_equation(&off_rho, |p, q| {
        if p == q {
            return vec![];
        }
        vec![term(t, p, q, 1.0), term(x, p, q, -1.0)]
    });
    // z_i = (X_ii - T_ii - ρ_ii)/(m-1)
    hp.add_matrix_equation(&kernel_diag_rhs(rho, v, -inv), |a, b| {
        let mut out = vec![term(u, a, b, 1.0)];
        for p in 0..d {
            for q in 0..d {
                out.push(Term {
                    block: x,
                    p,
                    q,
                    coef: -v[(p, a)].conj() * v[(q, b)],
                });
            }
        }
        for i in 0..d {
            let w = v[(i, a)].conj() * v[(i, b)] * inv;
            out.push(Term {
                block: x,
                p: i,
                q: i,
                coef: -w,
            });
            out.push(Term {
                block: t,
                p: i,
                q: i,
                coef: w,
            });
        }
        out
    });

    let mut obj = HermitianMap::new();
    obj.trace_with(x, &HermitianOperator::identity(d), -1.0);
    hp.set_objective(obj);
    hp
}

/// Dual of the `ε = 0` kernel-reduced DIO primal, negated: `max -Σ x_i` with
/// `T = m diag(x) + Y - mΔ(Y) - mΔ(ρ) ⪰ 0` and `V†YV ⪰ 0`. `Y` is written
/// through `T`: its off-diagonal equals that of `T`, its diagonal follows
/// from `T_ii`.
fn dio_dual_kernel(rho: &HermitianOperator, m: usize, v: &DMatrix<C64>) -> HermitianProgram {
    let d = rho.dim();
    let k = v.ncols();
    let mf = m as f64;
    let inv = 1.0 / (mf - 1.0);
    let mut hp = HermitianProgram::new();
    let x = hp.add_nonneg(d);
    let t = hp.add_psd(d);
    let u = hp.add_psd(k);

    hp.add_matrix_equation(&kernel_diag_rhs(rho, v, -mf * inv), |a, b| {
        let mut out = vec![term(u, a, b, 1.0)];
        for p in 0..d {
            for q in 0..d {
                if p != q {
                    out.push(Term {
                        block: t,
                        p,
                        q,
                        coef: -v[(p, a)].conj() * v[(q, b)],
                    });
                }
            }
        }
        for i in 0..d {
            let w = v[(i, a)].conj() * v[(i, b)] * inv;
            out.push(Term {
                block: x,
                p: i,
                q: i,
                coef: -w * mf,
            });
            out.push(Term {
                block: t,
                p: i,
                q: i,
                coef: w,
            });
        }
        out
    });

    let mut obj = HermitianMap::new();
    for i in 0..d {
        obj.scalar(x, i, -1.0);
    }
    hp.set_objective(obj);
    hp
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Membership {
    Mio,
    Dio,
}

/// Index of `(a, b)` in a composite of output dimension `d_out`.
#[inline]
pub(crate) fn pair(a: usize, b: usize, d_out: usize) -> usize {
    a * d_out + b
}

/// Adds the incoherent-operation rows on a Choi block of side `d_in·d_out`.
pub(crate) fn add_membership_rows(
    hp: &mut HermitianProgram,
    jb: usize,
    d_in: usize,
    d_out: usize,
    class: Membership,
) {
    let zero = |hp: &mut HermitianProgram, u: usize, v: usize| {
        for phase in [c(1.0, 0.0), c(0.0, -1.0)] {
            let mut row = HermitianMap::new();
            row.entry(jb, u, v, phase);
            hp.add_constraint(row, 0.0);
        }
    };
    // ℰ(|a⟩⟨a|) diagonal
    for a in 0..d_in {
        for b in 0..d_out {
            for b2 in b + 1..d_out {
                zero(hp, pair(a, b, d_out), pair(a, b2, d_out));
            }
        }
    }
    // Δ(ℰ(|a⟩⟨a'|)) = 0 for a ≠ a'
    if class == Membership::Dio {
        for a in 0..d_in {
            for a2 in a + 1..d_in {
                for b in 0..d_out {
                    zero(hp, pair(a, b, d_out), pair(a2, b, d_out));
                }
            }
        }
    }
}

/// Terms of `ℰ(σ)_{bb'} = Σ σ_{aa'} J_{(a,b),(a',b')}`.
pub(crate) fn action_terms(
    jb: usize,
    sigma: &HermitianOperator,
    d_out: usize,
    b: usize,
    b2: usize,
) -> Vec<Term> {
    let d_in = sigma.dim();
    let mut out = Vec::new();
    for a in 0..d_in {
        for a2 in 0..d_in {
            let s = sigma.get(a, a2);
            if s.norm() != 0.0 {
                out.push(Term {
                    block: jb,
                    p: pair(a, b, d_out),
                    q: pair(a2, b2, d_out),
                    coef: s,
                });
            }
        }
    }
    out
}

/// `tr_B J` entry terms.
pub(crate) fn marginal_terms(jb: usize, d_out: usize, a: usize, a2: usize) -> Vec<Term> {
    (0..d_out)
        .map(|b| term(jb, pair(a, b, d_out), pair(a2, b, d_out), 1.0))
        .collect()
}

/// `max p` with `ℰ(ρ) = p·target`, `ℰ` trace non-increasing and in `class`.
/// Blocks: `J`, `K = 1 - tr_B J`, `p`. When `target` is rank deficient, `J`
/// is restricted to [`choi_face`] and the returned basis lifts it back.
pub(crate) fn exact_choi(
    rho: &HermitianOperator,
    target: &HermitianOperator,
    class: Membership,
) -> (HermitianProgram, usize, Option<DMatrix<C64>>) {
    let d_in = rho.dim();
    let d_out = target.dim();
    let mut hp = HermitianProgram::new();
    let jb = hp.add_psd(d_in * d_out);
    let kb = hp.add_psd(d_in);
    let pb = hp.add_nonneg(1);

    hp.add_matrix_equation(&HermitianOperator::identity(d_in), |a, a2| {
        let mut t = marginal_terms(jb, d_out, a, a2);
        t.push(term(kb, a, a2, 1.0));
        t
    });
    add_membership_rows(&mut hp, jb, d_in, d_out, class);
    hp.add_matrix_equation(&HermitianOperator::zeros(d_out), |b, b2| {
        let mut t = action_terms(jb, rho, d_out, b, b2);
        t.push(Term {
            block: pb,
            p: 0,
            q: 0,
            coef: -target.get(b, b2),
        });
        t
    });
    let mut obj = HermitianMap::new();
    obj.scalar(pb, 0, 1.0);
    hp.set_objective(obj);
    let face = choi_face(rho, target);
    if let Some(b) = &face {
        hp.restrict_psd(jb, b)
            .expect("J is a PSD block of matching side");
    }
    (hp, jb, face)
}
