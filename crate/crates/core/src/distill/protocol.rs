//! Explicit operations from compact solutions, and independent checks of
//! Choi matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use super::OpClass;
use crate::error::{domain, Error, Result};
use crate::linalg::{dephase, partial_trace, tensor, HermitianOperator, C64};
use crate::states::{max_coherent, DistillationInstance};

pub const PROTOCOL_TOL: f64 = 1e-6;

/// Choi matrix with convention `ℰ(|a⟩⟨a'|)_{bb'} = J_{(a,b),(a',b')}`,
/// i.e. `ℰ(X) = tr_A J (Xᵀ ⊗ 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub d_in: usize,
    pub d_out: usize,
    pub j: HermitianOperator,
}

impl ChoiMatrix {
    pub fn new(d_in: usize, d_out: usize, j: HermitianOperator) -> Result<Self> {
        if j.dim() != d_in * d_out {
            return Err(Error::DimensionMismatch {
                expected: d_in * d_out,
                found: j.dim(),
            });
        }
        Ok(Self { d_in, d_out, j })
    }

    /// Choi matrix of `X ↦ Σ_k K_k X K_k†`.
    pub fn from_kraus(kraus: &[DMatrix<C64>]) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return domain("empty Kraus list");
        };
        let (d_out, d_in) = first.shape();
        let mut j = DMatrix::<C64>::zeros(d_in * d_out, d_in * d_out);
        for k in kraus {
            if k.shape() != (d_out, d_in) {
                return domain("Kraus operators of different shapes");
            }
            // J_{(a,b),(a',b')} = Σ_k K_{ba} conj(K_{b'a'})
            let v = DMatrix::from_fn(d_in * d_out, 1, |ab, _| k[(ab % d_out, ab / d_out)]);
            j += &v * v.adjoint();
        }
        Ok(Self {
            d_in,
            d_out,
            j: HermitianOperator::new(j)?,
        })
    }

    /// `ℰ(|a⟩⟨a'|)`
    pub fn image_of_unit(&self, a: usize, a2: usize) -> DMatrix<C64> {
        let o = self.d_out;
        DMatrix::from_fn(o, o, |b, b2| self.j.get(a * o + b, a2 * o + b2))
    }

    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        if x.dim() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                found: x.dim(),
            });
        }
        let mut out = DMatrix::<C64>::zeros(self.d_out, self.d_out);
        for a in 0..self.d_in {
            for a2 in 0..self.d_in {
                let s = x.get(a, a2);
                if s.norm() != 0.0 {
                    out += self.image_of_unit(a, a2) * s;
                }
            }
        }
        HermitianOperator::new(out)
    }

    /// `tr_B J`
    pub fn input_marginal(&self) -> HermitianOperator {
        partial_trace(&self.j, [self.d_in, self.d_out], 0).expect("consistent dims")
    }
}

fn feasibility_violations(
    inst: &DistillationInstance,
    g: &HermitianOperator,
    c: &HermitianOperator,
    tol: f64,
) -> Vec<String> {
    let d = inst.dim();
    let m = inst.m as f64;
    let mut bad = Vec::new();
    let mut check = |name: &str, v: f64| {
        if v > tol {
            bad.push(format!("{name} violated by {v:.3e}"));
        }
    };
    check("C ⪰ 0", -c.min_eigenvalue());
    check("G ⪰ C", -g.sub(c).min_eigenvalue());
    check("G ⪯ 1", g.max_eigenvalue() - 1.0);
    let diag = (0..d)
        .map(|i| (g.get(i, i) - c.get(i, i) * m).norm())
        .fold(0.0, f64::max);
    check("Δ(G) = mΔ(C)", diag);
    let fid = (1.0 - inst.eps) * g.inner(&inst.rho) - c.inner(&inst.rho);
    check("tr Cρ ≥ (1-ε) tr Gρ", fid);
    bad
}

/// Success-branch operation `J = C'ᵀ ⊗ Ψ_m + Dᵀ ⊗ (1 - Ψ_m)`, `D = (G - C')/(m - 1)`,
/// where `C'` mixes `C` towards `G/m` until the fidelity constraint is tight.
pub fn extract_protocol(
    inst: &DistillationInstance,
    g: &HermitianOperator,
    c: &HermitianOperator,
) -> Result<ChoiMatrix> {
    extract_protocol_with_tol(inst, g, c, PROTOCOL_TOL)
}

pub fn extract_protocol_with_tol(
    inst: &DistillationInstance,
    g: &HermitianOperator,
    c: &HermitianOperator,
    tol: f64,
) -> Result<ChoiMatrix> {
    let d = inst.dim();
    if g.dim() != d || c.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.dim().max(c.dim()),
        });
    }
    let bad = feasibility_violations(inst, g, c, tol);
    if !bad.is_empty() {
        return domain(format!("(G, C) infeasible: {}", bad.join("; ")));
    }
    let m = inst.m as f64;
    let tc = c.inner(&inst.rho);
    let tg = g.inner(&inst.rho);
    let denom = tc - tg / m;
    let t = if denom > 1e-14 {
        ((tc - (1.0 - inst.eps) * tg) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c2 = c.scale(1.0 - t).add(&g.scale(t / m));
    let dm = g.sub(&c2).scale(1.0 / (m - 1.0));
    let psi = max_coherent(inst.m)?.density();
    let rest = HermitianOperator::identity(inst.m).sub(&psi);
    let j = tensor(&c2.transpose(), &psi).add(&tensor(&dm.transpose(), &rest));
    ChoiMatrix::new(d, inst.m, j)
}

/// Maximum violation of each condition; `passes` compares them against a tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolReport {
    /// `-λ_min(J)`
    pub psd: f64,
    /// `λ_max(tr_B J - 1)` for operations, `‖tr_B J - 1‖` for channels.
    pub trace: f64,
    pub membership: f64,
    /// `max |ℰ(ρ) - p·target|` entrywise.
    pub action: f64,
}

impl ProtocolReport {
    pub fn max_violation(&self) -> f64 {
        self.psd
            .max(self.trace)
            .max(self.membership)
            .max(self.action)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

fn membership_violation(j: &ChoiMatrix, class: OpClass) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..j.d_in {
        let img = j.image_of_unit(a, a);
        for b in 0..j.d_out {
            for b2 in 0..j.d_out {
                if b != b2 {
                    worst = worst.max(img[(b, b2)].norm());
                }
            }
        }
    }
    if class == OpClass::Dio {
        for a in 0..j.d_in {
            for a2 in 0..j.d_in {
                if a != a2 {
                    let img = j.image_of_unit(a, a2);
                    for b in 0..j.d_out {
                        worst = worst.max(img[(b, b)].norm());
                    }
                }
            }
        }
    }
    worst
}

fn action_violation(
    j: &ChoiMatrix,
    rho: &HermitianOperator,
    expected_p: f64,
    expected_target: &HermitianOperator,
) -> Result<f64> {
    let out = j.apply(rho)?;
    if out.dim() != expected_target.dim() {
        return Err(Error::DimensionMismatch {
            expected: out.dim(),
            found: expected_target.dim(),
        });
    }
    Ok(out.max_abs_diff(&expected_target.scale(expected_p)))
}

/// Checks a trace non-increasing operation.
pub fn verify_protocol(
    j: &ChoiMatrix,
    class: OpClass,
    rho: &HermitianOperator,
    expected_p: f64,
    expected_target: &HermitianOperator,
) -> Result<ProtocolReport> {
    let marginal = j.input_marginal();
    Ok(ProtocolReport {
        psd: (-j.j.min_eigenvalue()).max(0.0),
        trace: (marginal.max_eigenvalue() - 1.0).max(0.0),
        membership: membership_violation(j, class),
        action: action_violation(j, rho, expected_p, expected_target)?,
    })
}

/// Checks a full channel: like [`verify_protocol`] but with `tr_B J = 1`.
/// `expected` is the required output `ℰ(ρ)`.
pub fn verify_channel(
    j: &ChoiMatrix,
    class: OpClass,
    rho: &HermitianOperator,
    expected: &HermitianOperator,
) -> Result<ProtocolReport> {
    let marginal = j.input_marginal();
    let dev = marginal
        .sub(&HermitianOperator::identity(j.d_in))
        .operator_norm();
    Ok(ProtocolReport {
        psd: (-j.j.min_eigenvalue()).max(0.0),
        trace: dev,
        membership: membership_violation(j, class),
        action: action_violation(j, rho, 1.0, expected)?,
    })
}

/// Choi matrix of the completely dephasing channel on dimension `d`.
pub fn dephasing_choi(d: usize) -> ChoiMatrix {
    let mut j = DMatrix::<C64>::zeros(d * d, d * d);
    for a in 0..d {
        j[(a * d + a, a * d + a)] = C64::new(1.0, 0.0);
    }
    let j = HermitianOperator::new(j).expect("diagonal");
    debug_assert_eq!(dephase(&j), j);
    ChoiMatrix {
        d_in: d,
        d_out: d,
        j,
    }
}
