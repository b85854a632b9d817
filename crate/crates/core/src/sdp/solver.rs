//! Infeasible-start primal-dual interior-point method.
//!
//! NT scaling: with `X = L Lᵀ`, `S = R Rᵀ` and `Rᵀ L = U Σ Vᵀ`, the matrix
//! `G = L V Σ^{-1/2}` satisfies `G⁻¹ X G⁻ᵀ = Gᵀ S G = Σ`, and `W = G Gᵀ`.
//! Each Newton system reduces to the Schur complement
//! `M_ij = <A_i, W A_j W>` (or `Σ_k a_ik a_jk x_k / s_k` on orthants).

use nalgebra::{DMatrix, DVector};

use super::presolve::presolve;
use super::{BlockValue, Cone, ConicProgram, ConicSolution, Entry, SolveOptions, SolveStatus};

const STEP_FRACTION: f64 = 0.98;
const STALL_STEP: f64 = 1e-9;
const REFINE_STEPS: usize = 20;

struct Data {
    blocks: Vec<Cone>,
    rows: Vec<Vec<Entry>>,
    b: DVector<f64>,
    c: Vec<BlockValue>,
    /// For each block, `(row, entries of that row in the block)`, rows ascending.
    by_block: Vec<Vec<(usize, Vec<Entry>)>>,
}

impl Data {
    fn new(p: &ConicProgram, kept: &[usize]) -> Self {
        let blocks = p.blocks().to_vec();
        let rows: Vec<Vec<Entry>> = kept
            .iter()
            .map(|&i| p.constraints()[i].map.entries().to_vec())
            .collect();
        let b = DVector::from_iterator(kept.len(), kept.iter().map(|&i| p.constraints()[i].rhs));
        let c = blocks
            .iter()
            .enumerate()
            .map(|(k, &cone)| p.objective().dense_block(k, cone))
            .collect();
        let mut by_block: Vec<Vec<(usize, Vec<Entry>)>> = vec![Vec::new(); blocks.len()];
        for (i, row) in rows.iter().enumerate() {
            for e in row {
                let list = &mut by_block[e.block];
                match list.last_mut() {
                    Some((r, es)) if *r == i => es.push(*e),
                    _ => list.push((i, vec![*e])),
                }
            }
        }
        Self {
            blocks,
            rows,
            b,
            c,
            by_block,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn apply_a(&self, x: &[BlockValue]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(|e| match &x[e.block] {
                        BlockValue::Psd(m) => e.weight() * e.value * m[(e.row, e.col)],
                        BlockValue::Nonneg(v) => e.value * v[e.row],
                    })
                    .sum::<f64>()
            }),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<BlockValue> {
        let mut out: Vec<BlockValue> = self.blocks.iter().map(|&c| BlockValue::zeros(c)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for e in row {
                match &mut out[e.block] {
                    BlockValue::Psd(m) => {
                        m[(e.row, e.col)] += yi * e.value;
                        if e.row != e.col {
                            m[(e.col, e.row)] += yi * e.value;
                        }
                    }
                    BlockValue::Nonneg(v) => v[e.row] += yi * e.value,
                }
            }
        }
        out
    }
}

fn inner(a: &[BlockValue], b: &[BlockValue]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn norm(a: &[BlockValue]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

enum Scaling {
    Psd {
        g: DMatrix<f64>,
        ginv: DMatrix<f64>,
        w: DMatrix<f64>,
        d: DVector<f64>,
        lx_inv: DMatrix<f64>,
        ls_inv: DMatrix<f64>,
    },
    Lp {
        x: DVector<f64>,
        s: DVector<f64>,
    },
}

fn lower_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
}

fn nt_scaling(x: &BlockValue, s: &BlockValue) -> Option<Scaling> {
    match (x, s) {
        (BlockValue::Psd(x), BlockValue::Psd(s)) => {
            let lx = x.clone().cholesky()?.unpack();
            let ls = s.clone().cholesky()?.unpack();
            let svd = (ls.transpose() * &lx).svd(false, true);
            let vt = svd.v_t?;
            let d = svd.singular_values;
            if d.iter().any(|&v| !v.is_finite() || v <= 0.0) {
                return None;
            }
            let lx_inv = lower_inverse(&lx)?;
            let ls_inv = lower_inverse(&ls)?;
            let mut g = &lx * vt.transpose();
            let mut ginv = &vt * &lx_inv;
            for k in 0..d.len() {
                let sq = d[k].sqrt();
                g.column_mut(k).scale_mut(1.0 / sq);
                ginv.row_mut(k).scale_mut(sq);
            }
            let w = &g * g.transpose();
            Some(Scaling::Psd {
                g,
                ginv,
                w,
                d,
                lx_inv,
                ls_inv,
            })
        }
        (BlockValue::Nonneg(x), BlockValue::Nonneg(s)) => {
            if x.iter().chain(s.iter()).any(|&v| v.is_nan() || v <= 0.0) {
                return None;
            }
            Some(Scaling::Lp {
                x: x.clone(),
                s: s.clone(),
            })
        }
        _ => None,
    }
}

fn apply_w(sc: &Scaling, v: &BlockValue) -> BlockValue {
    match (sc, v) {
        (Scaling::Psd { w, .. }, BlockValue::Psd(m)) => BlockValue::Psd(w * m * w),
        (Scaling::Lp { x, s }, BlockValue::Nonneg(v)) => {
            BlockValue::Nonneg(v.component_mul(x).component_div(s))
        }
        _ => unreachable!(),
    }
}

// Rows with more entries than this multiple of the block side use a dense product.
const DENSE_ROW_FACTOR: usize = 2;

/// Adds one PSD block's contribution to the upper triangle of the Schur
/// complement. Dense rows go through `vec(A)ᵀ vec(W A W)` as one matrix
/// product; sparse pairs use `W` entrywise.
fn psd_schur(mat: &mut DMatrix<f64>, list: &[(usize, Vec<Entry>)], w: &DMatrix<f64>) {
    let n = w.nrows();
    let (dense, sparse): (Vec<usize>, Vec<usize>) =
        (0..list.len()).partition(|&k| list[k].1.len() > DENSE_ROW_FACTOR * n);
    let mut avec = DMatrix::<f64>::zeros(n * n, dense.len());
    let mut pvec = DMatrix::<f64>::zeros(n * n, dense.len());
    for (col, &k) in dense.iter().enumerate() {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for e in &list[k].1 {
            a[(e.row, e.col)] += e.value;
            if e.row != e.col {
                a[(e.col, e.row)] += e.value;
            }
        }
        let pj = w * &a * w;
        avec.column_mut(col).copy_from_slice(a.as_slice());
        pvec.column_mut(col).copy_from_slice(pj.as_slice());
    }
    let mut add = |i: usize, j: usize, v: f64| {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        mat[(lo, hi)] += v;
    };
    if !dense.is_empty() {
        let dd = avec.transpose() * &pvec;
        for a in 0..dense.len() {
            for b in a..dense.len() {
                add(list[dense[a]].0, list[dense[b]].0, dd[(a, b)]);
            }
        }
    }
    for &si in &sparse {
        let (i, ei) = &list[si];
        for (col, &dj) in dense.iter().enumerate() {
            let pj = pvec.column(col);
            let v: f64 = ei
                .iter()
                .map(|e| e.weight() * e.value * pj[e.col * n + e.row])
                .sum();
            add(*i, list[dj].0, v);
        }
    }
    for (pos, &sj) in sparse.iter().enumerate() {
        let (j, ej) = &list[sj];
        for &si in &sparse[..=pos] {
            let (i, ei) = &list[si];
            let mut v = 0.0;
            for e in ei {
                let (p, q) = (e.row, e.col);
                let fe = if p == q { 0.5 } else { 1.0 };
                for f in ej {
                    let (r, s) = (f.row, f.col);
                    let ff = if r == s { 0.5 } else { 1.0 };
                    v += 2.0
                        * fe
                        * ff
                        * e.value
                        * f.value
                        * (w[(p, r)] * w[(q, s)] + w[(p, s)] * w[(q, r)]);
                }
            }
            add(*i, *j, v);
        }
    }
}

fn schur(data: &Data, scal: &[Scaling]) -> DMatrix<f64> {
    let m = data.m();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for (b, list) in data.by_block.iter().enumerate() {
        match &scal[b] {
            Scaling::Psd { w, .. } => psd_schur(&mut mat, list, w),
            Scaling::Lp { x, s } => {
                let mut tmp = vec![0.0; x.len()];
                for (pj, (j, ej)) in list.iter().enumerate() {
                    for f in ej {
                        tmp[f.row] += f.value * x[f.row] / s[f.row];
                    }
                    for (i, ei) in &list[..=pj] {
                        let v: f64 = ei.iter().map(|e| e.value * tmp[e.row]).sum();
                        mat[(*i, *j)] += v;
                    }
                    for f in ej {
                        tmp[f.row] = 0.0;
                    }
                }
            }
        }
    }
    for j in 0..m {
        for i in 0..j {
            mat[(j, i)] = mat[(i, j)];
        }
    }
    mat
}

struct Factor(nalgebra::Cholesky<f64, nalgebra::Dyn>);

fn factor(mat: DMatrix<f64>) -> Option<Factor> {
    let m = mat.nrows();
    if let Some(ch) = mat.clone().cholesky() {
        return Some(Factor(ch));
    }
    let scale = (0..m).map(|i| mat[(i, i)].abs()).fold(1e-300, f64::max);
    let mut reg = 1e-14 * scale;
    for _ in 0..24 {
        let mut shifted = mat.clone();
        for i in 0..m {
            shifted[(i, i)] += reg;
        }
        if let Some(ch) = shifted.cholesky() {
            return Some(Factor(ch));
        }
        reg *= 4.0;
    }
    None
}

struct Direction {
    dx: Vec<BlockValue>,
    dy: DVector<f64>,
    ds: Vec<BlockValue>,
}

/// Solves for the direction whose scaled complementarity residual is `rc`.
fn direction(
    data: &Data,
    scal: &[Scaling],
    fac: &Factor,
    rp: &DVector<f64>,
    rd: &[BlockValue],
    rc: &[BlockValue],
) -> Direction {
    let rhat: Vec<BlockValue> = scal
        .iter()
        .zip(rc)
        .map(|(sc, r)| match (sc, r) {
            (Scaling::Psd { g, d, .. }, BlockValue::Psd(r)) => {
                let n = d.len();
                let h = DMatrix::from_fn(n, n, |i, j| 2.0 * r[(i, j)] / (d[i] + d[j]));
                BlockValue::Psd(g * h * g.transpose())
            }
            (Scaling::Lp { s, .. }, BlockValue::Nonneg(r)) => {
                BlockValue::Nonneg(r.component_div(s))
            }
            _ => unreachable!(),
        })
        .collect();
    let mut t = rhat.clone();
    for ((tb, sc), r) in t.iter_mut().zip(scal).zip(rd) {
        tb.axpy(1.0, &apply_w(sc, r));
    }
    let rhs = data.apply_a(&t) - rp;
    let dy = fac.0.solve(&rhs);
    let mut ds = data.apply_at(&dy);
    for (d, r) in ds.iter_mut().zip(rd) {
        d.axpy(-1.0, r);
    }
    let mut dx: Vec<BlockValue> = rhat
        .into_iter()
        .zip(scal.iter().zip(&ds))
        .map(|(mut rh, (sc, d))| {
            rh.axpy(-1.0, &apply_w(sc, d));
            rh
        })
        .collect();
    let mut dy = dy;
    // iterative refinement of A dx = rp; the Schur solve degrades as mu -> 0
    let tol = 1e-14 * (1.0 + rp.amax());
    let mut err = rp - data.apply_a(&dx);
    for _ in 0..REFINE_STEPS {
        let e = err.amax();
        if e <= tol {
            break;
        }
        let dely = -fac.0.solve(&err);
        let dels = data.apply_at(&dely);
        let mut dx2 = dx.clone();
        for (xb, (sc, d)) in dx2.iter_mut().zip(scal.iter().zip(&dels)) {
            xb.axpy(-1.0, &apply_w(sc, d));
        }
        let err2 = rp - data.apply_a(&dx2);
        if err2.amax() > 0.9 * e {
            break;
        }
        for (sb, d) in ds.iter_mut().zip(&dels) {
            sb.axpy(1.0, d);
        }
        dx = dx2;
        dy += dely;
        err = err2;
    }
    Direction { dx, dy, ds }
}

/// Largest `α` with `V + α ΔV` in the cone, given `linv = chol(V)⁻¹` (PSD).
fn max_step(sc: &Scaling, dv: &BlockValue, primal: bool) -> f64 {
    match (sc, dv) {
        (Scaling::Psd { lx_inv, ls_inv, .. }, BlockValue::Psd(d)) => {
            let li = if primal { lx_inv } else { ls_inv };
            let mut t = li * d * li.transpose();
            t = (&t + t.transpose()).scale(0.5);
            let lmin = t.symmetric_eigenvalues().min();
            if lmin < 0.0 {
                -1.0 / lmin
            } else {
                f64::INFINITY
            }
        }
        (Scaling::Lp { x, s }, BlockValue::Nonneg(d)) => {
            let v = if primal { x } else { s };
            v.iter()
                .zip(d.iter())
                .filter(|(_, &dk)| dk < 0.0)
                .map(|(&vk, &dk)| -vk / dk)
                .fold(f64::INFINITY, f64::min)
        }
        _ => unreachable!(),
    }
}

fn step_lengths(scal: &[Scaling], dir: &Direction) -> (f64, f64) {
    let ap = scal
        .iter()
        .zip(&dir.dx)
        .map(|(sc, d)| max_step(sc, d, true))
        .fold(f64::INFINITY, f64::min);
    let ad = scal
        .iter()
        .zip(&dir.ds)
        .map(|(sc, d)| max_step(sc, d, false))
        .fold(f64::INFINITY, f64::min);
    (ap, ad)
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()).scale(0.5)
}

pub(crate) fn solve(p: &ConicProgram, opts: &SolveOptions) -> ConicSolution {
    let blocks = p.blocks().to_vec();
    let fail = |msg: String, iterations: usize| ConicSolution {
        status: SolveStatus::NumericalFailure,
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        x: p.zero_point(),
        y: DVector::zeros(p.constraints().len()),
        s: p.zero_point(),
        gap: f64::NAN,
        primal_infeasibility: f64::NAN,
        dual_infeasibility: f64::NAN,
        iterations,
        message: msg,
    };
    if let Err(e) = p.validate() {
        return fail(e.to_string(), 0);
    }
    let pre = match presolve(p) {
        Ok(pre) => pre,
        Err(msg) => return fail(msg, 0),
    };
    let data = Data::new(p, &pre.kept);
    let nu: f64 = blocks.iter().map(|c| c.size() as f64).sum();
    let b_norm = data.b.norm();
    let c_norm = norm(&data.c);

    let tau = 1.0 + data.b.amax();
    let mut x: Vec<BlockValue> = blocks
        .iter()
        .map(|&c| BlockValue::scaled_identity(c, tau))
        .collect();
    let mut s = x.clone();
    let mut y = DVector::<f64>::zeros(data.m());

    let mut stalls = 0;
    let mut iter = 0;
    let (status, message, stats) = loop {
        let rp = &data.b - data.apply_a(&x);
        let aty = data.apply_at(&y);
        let rd: Vec<BlockValue> = (0..blocks.len())
            .map(|k| {
                let mut r = data.c[k].clone();
                r.axpy(-1.0, &aty[k]);
                r.axpy(1.0, &s[k]);
                r
            })
            .collect();
        let pobj = inner(&data.c, &x);
        let dobj = data.b.dot(&y);
        let xs = inner(&x, &s);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = (pobj - dobj).abs() / denom;
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = norm(&rd) / (1.0 + c_norm);
        let stats = (pobj, dobj, gap, pinf, dinf);

        if !(pobj.is_finite() && dobj.is_finite() && xs.is_finite()) {
            break (
                SolveStatus::NumericalFailure,
                "iterates diverged".to_string(),
                stats,
            );
        }
        if gap <= opts.gap_tol
            && xs / denom <= opts.gap_tol
            && pinf <= opts.feas_tol
            && dinf <= opts.feas_tol
        {
            break (SolveStatus::Optimal, String::new(), stats);
        }
        if iter >= opts.max_iter {
            break (
                SolveStatus::MaxIterations,
                format!(
                    "gap {gap:.2e}, primal infeasibility {pinf:.2e}, dual infeasibility {dinf:.2e}"
                ),
                stats,
            );
        }
        iter += 1;

        let Some(scal) = x
            .iter()
            .zip(&s)
            .map(|(xb, sb)| nt_scaling(xb, sb))
            .collect::<Option<Vec<_>>>()
        else {
            break (
                SolveStatus::NumericalFailure,
                "lost positive definiteness".into(),
                stats,
            );
        };
        let Some(fac) = factor(schur(&data, &scal)) else {
            break (
                SolveStatus::NumericalFailure,
                "Schur complement is singular".into(),
                stats,
            );
        };
        let mu = xs / nu;

        // predictor
        let rc_aff: Vec<BlockValue> = scal
            .iter()
            .map(|sc| match sc {
                Scaling::Psd { d, .. } => {
                    BlockValue::Psd(DMatrix::from_diagonal(&d.map(|v| -v * v)))
                }
                Scaling::Lp { x, s } => BlockValue::Nonneg(-x.component_mul(s)),
            })
            .collect();
        let aff = direction(&data, &scal, &fac, &rp, &rd, &rc_aff);
        let (ap, ad) = step_lengths(&scal, &aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut xa = x.clone();
        let mut sa = s.clone();
        for k in 0..blocks.len() {
            xa[k].axpy(ap, &aff.dx[k]);
            sa[k].axpy(ad, &aff.ds[k]);
        }
        let mu_aff = (inner(&xa, &sa) / nu).max(0.0);
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = (mu_aff / mu).powf(expon).clamp(0.0, 1.0);

        // corrector
        let rc: Vec<BlockValue> = scal
            .iter()
            .enumerate()
            .map(|(k, sc)| match (sc, &aff.dx[k], &aff.ds[k]) {
                (Scaling::Psd { g, ginv, d, .. }, BlockValue::Psd(dx), BlockValue::Psd(ds)) => {
                    let dxt = ginv * dx * ginv.transpose();
                    let dst = g.transpose() * ds * g;
                    let mut r = sym(&dxt * &dst).scale(-1.0);
                    for i in 0..d.len() {
                        r[(i, i)] += sigma * mu - d[i] * d[i];
                    }
                    BlockValue::Psd(r)
                }
                (Scaling::Lp { x, s }, BlockValue::Nonneg(dx), BlockValue::Nonneg(ds)) => {
                    BlockValue::Nonneg(DVector::from_fn(x.len(), |i, _| {
                        sigma * mu - x[i] * s[i] - dx[i] * ds[i]
                    }))
                }
                _ => unreachable!(),
            })
            .collect();
        let dir = direction(&data, &scal, &fac, &rp, &rd, &rc);
        let (ap, ad) = step_lengths(&scal, &dir);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        for k in 0..blocks.len() {
            x[k].axpy(ap, &dir.dx[k]);
            s[k].axpy(ad, &dir.ds[k]);
            if let BlockValue::Psd(m) = &mut x[k] {
                *m = sym(m.clone());
            }
            if let BlockValue::Psd(m) = &mut s[k] {
                *m = sym(m.clone());
            }
        }
        y.axpy(ad, &dir.dy, 1.0);

        if ap.max(ad) < STALL_STEP {
            stalls += 1;
            if stalls >= 3 {
                let stats = (inner(&data.c, &x), data.b.dot(&y), gap, pinf, dinf);
                break (
                    SolveStatus::NumericalFailure,
                    "step length stalled".into(),
                    stats,
                );
            }
        } else {
            stalls = 0;
        }
    };

    let mut y_full = DVector::zeros(p.constraints().len());
    for (k, &i) in pre.kept.iter().enumerate() {
        y_full[i] = y[k];
    }
    let (pobj, dobj, gap, pinf, dinf) = stats;
    ConicSolution {
        status,
        primal_value: pobj,
        dual_value: dobj,
        x,
        y: y_full,
        s,
        gap,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        iterations: iter,
        message,
    }
}
