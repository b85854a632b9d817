//! Dense Hermitian kernel.
//!
//! Operators are stored as complex `nalgebra` matrices. Basis states are
//! indexed from zero, so the state written `|1>, ..., |m>` in physics notation
//! is `0..m` here. Composite systems use row-major index order: on `A ⊗ B`
//! the pair `(a, b)` lives at `a * dim_b + b`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_CLIP, 0)` are treated as zero before square roots.
pub const PSD_CLIP: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A square Hermitian matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianOperator(dim={}) {}", self.dim(), self.mat)
    }
}

impl HermitianOperator {
    /// Validates Hermiticity. Defects below `1e-12` (relative to the largest
    /// entry) are averaged away; anything larger is rejected.
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return domain("operator dimension must be at least 1");
        }
        let scale = mat.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let adj = mat.adjoint();
        let defect = (&mat - &adj)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self {
            mat: (mat + adj).unscale(2.0),
        })
    }

    pub fn from_real(mat: DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(r))
    }

    /// Builds from row-major real entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_real(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Symmetrizes without checking. Only for matrices that are Hermitian by
    /// construction up to rounding.
    pub(crate) fn from_hermitian_unchecked(mat: DMatrix<C64>) -> Self {
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj).unscale(2.0),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            mat: DMatrix::from_fn(n, n, |i, j| if i == j { r(values[i]) } else { r(0.0) }),
        }
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        mat[(i, i)] = r(1.0);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// `tr(self * other)`, real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.mat[(i, j)] * other.mat[(j, i)]).re;
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// Transpose in the computational basis (equal to entrywise conjugation).
    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    /// Conjugation `U H U†`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        Self::from_hermitian_unchecked(u * &self.mat * u.adjoint())
    }

    pub fn is_real(&self) -> bool {
        self.mat.iter().all(|z| z.im == 0.0)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        eigh(self).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().max()
    }

    /// Spectral norm.
    pub fn operator_norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev.max().abs().max(ev.min().abs())
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Applies `f` to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = eigh(self);
        let d = DMatrix::from_diagonal(&e.values.map(|v| r(f(v))));
        Self::from_hermitian_unchecked(&e.vectors * d * e.vectors.adjoint())
    }

    /// Checks PSD within [`PSD_CLIP`] and unit trace within `1e-9`.
    pub fn check_density(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return domain(format!("density operator must have unit trace, got {tr}"));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_CLIP {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: DVector<C64>,
}

impl PureState {
    /// Requires unit norm within `1e-12`.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return domain("state dimension must be at least 1");
        }
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return domain(format!("state must have unit norm, squared norm is {n2}"));
        }
        Ok(Self { amps })
    }

    /// Rescales to unit norm.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        let n = amps.norm();
        if amps.is_empty() || n == 0.0 || !n.is_finite() {
            return domain("cannot normalize a zero or empty vector");
        }
        Ok(Self {
            amps: amps.unscale(n),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(DVector::from_iterator(
            amps.len(),
            amps.iter().map(|&a| r(a)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm()).collect()
    }

    /// `|ψ><ψ|`.
    pub fn density(&self) -> HermitianOperator {
        HermitianOperator::from_hermitian_unchecked(&self.amps * self.amps.adjoint())
    }

    pub fn overlap(&self, rho: &HermitianOperator) -> f64 {
        (self.amps.adjoint() * rho.matrix() * &self.amps)[(0, 0)].re
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amps: self.amps.kronecker(&other.amps),
        }
    }
}

/// Eigendecomposition with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn eigh(h: &HermitianOperator) -> Eigh {
    let n = h.dim();
    let eig = h.matrix().clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

/// Diagonal part in the reference basis.
pub fn dephase(h: &HermitianOperator) -> HermitianOperator {
    let n = h.dim();
    let mut mat = DMatrix::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = r(h.mat[(i, i)].re);
    }
    HermitianOperator { mat }
}

/// Average of `P H Pᵀ` over all basis permutations, in closed form.
pub fn twirl(h: &HermitianOperator) -> HermitianOperator {
    let n = h.dim();
    if n == 1 {
        return h.clone();
    }
    let tr = h.trace();
    let total: C64 = h.mat.iter().sum();
    let diag_mean = tr / n as f64;
    let off_mean = (total.re - tr) / (n * (n - 1)) as f64;
    let mat = DMatrix::from_fn(n, n, |i, j| if i == j { r(diag_mean) } else { r(off_mean) });
    HermitianOperator { mat }
}

/// `‖√A √B‖₁²`.
pub fn fidelity(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    a.check_density()?;
    b.check_density()?;
    let prod = psd_sqrt(a)?.into_matrix() * psd_sqrt(b)?.into_matrix();
    let root_sum: f64 = prod.singular_values().sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

fn psd_sqrt(h: &HermitianOperator) -> Result<HermitianOperator> {
    let e = eigh(h);
    if e.values.min() < -PSD_CLIP {
        return Err(Error::NotPsd(e.values.min()));
    }
    // eigenvalues at rounding level are zero; their square roots would not be
    let floor = 64.0 * f64::EPSILON * e.values.amax().max(1.0);
    let d = DMatrix::from_diagonal(&e.values.map(|v| r(if v > floor { v.sqrt() } else { 0.0 })));
    Ok(HermitianOperator::from_hermitian_unchecked(
        &e.vectors * d * e.vectors.adjoint(),
    ))
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator {
        mat: a.mat.kronecker(&b.mat),
    }
}

/// Reduced operator on subsystem `keep` (0 or 1) of `H` on `d1 ⊗ d2`.
pub fn partial_trace(
    h: &HermitianOperator,
    dims: [usize; 2],
    keep: usize,
) -> Result<HermitianOperator> {
    let [d1, d2] = dims;
    if d1 * d2 != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: d1 * d2,
        });
    }
    let m = &h.mat;
    let out = match keep {
        0 => DMatrix::from_fn(d1, d1, |a, a2| {
            (0..d2).map(|b| m[(a * d2 + b, a2 * d2 + b)]).sum()
        }),
        1 => DMatrix::from_fn(d2, d2, |b, b2| {
            (0..d1).map(|a| m[(a * d2 + b, a * d2 + b2)]).sum()
        }),
        _ => return domain(format!("subsystem index must be 0 or 1, got {keep}")),
    };
    Ok(HermitianOperator { mat: out })
}

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_matrix(h: &HermitianOperator) -> DMatrix<f64> {
    let n = h.dim();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h.mat[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}
