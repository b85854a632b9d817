//! Canonical and example states, and the distillation instance triplet.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{c, eigh, r, HermitianOperator, PureState, C64};

/// `Ψ_m = m^{-1/2} Σ_i |i>`.
pub fn max_coherent(m: usize) -> Result<PureState> {
    if m < 1 {
        return domain("maximally coherent state needs m >= 1");
    }
    PureState::normalized(DVector::from_element(m, r(1.0)))
}

/// `Ψ_m^ε = (1-ε) Ψ_m + ε (1 - Ψ_m)/(m-1)`.
pub fn smoothed_target(m: usize, eps: f64) -> Result<HermitianOperator> {
    if m < 2 {
        return domain("smoothed target needs m >= 2");
    }
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("infidelity must lie in [0, 1], got {eps}"));
    }
    let psi = 1.0 / m as f64;
    let off = eps / (m - 1) as f64;
    // (1-ε)Ψ + ε(1-Ψ)/(m-1), written entrywise
    let mat = DMatrix::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (1.0 - eps) * psi + off * (id - psi)
    });
    HermitianOperator::from_real(mat)
}

/// States used in the worked examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleState {
    V1,
    V2,
    U1,
    U2,
    /// `(3|0> + |1>)/√10`
    MainExample,
    /// `(|0> + 3|1>)/√10`
    ThresholdExample,
}

impl ExampleState {
    pub const ALL: [ExampleState; 6] = [
        ExampleState::V1,
        ExampleState::V2,
        ExampleState::U1,
        ExampleState::U2,
        ExampleState::MainExample,
        ExampleState::ThresholdExample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleState::V1 => "v1",
            ExampleState::V2 => "v2",
            ExampleState::U1 => "u1",
            ExampleState::U2 => "u2",
            ExampleState::MainExample => "main_example",
            ExampleState::ThresholdExample => "threshold_example",
        }
    }
}

impl fmt::Display for ExampleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleState::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown named state `{s}`")))
    }
}

pub fn example_state(name: ExampleState) -> PureState {
    let (amps, norm): (&[f64], f64) = match name {
        ExampleState::V1 => (&[1.0, -1.0, -1.0, 1.0], 2.0),
        ExampleState::V2 => (&[2.0, 6.0, -3.0, 1.0], 5.0 * 2f64.sqrt()),
        ExampleState::U1 => (&[1.0, 1.0, 1.0, 1.0], 2.0),
        ExampleState::U2 => (&[3.0, -2.0, 1.0, 2.0], 3.0 * 2f64.sqrt()),
        ExampleState::MainExample => (&[3.0, 1.0], 10f64.sqrt()),
        ExampleState::ThresholdExample => (&[1.0, 3.0], 10f64.sqrt()),
    };
    let v = DVector::from_iterator(amps.len(), amps.iter().map(|&a| r(a / norm)));
    PureState::new(v).expect("example amplitudes are normalized")
}

/// `q |a><a| + (1-q) |b><b|` for the two-state families of the catalysis examples.
pub fn mixture(q: f64, a: &PureState, b: &PureState) -> Result<HermitianOperator> {
    if !(0.0..=1.0).contains(&q) {
        return domain(format!("mixing weight must lie in [0, 1], got {q}"));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.density().scale(q).add(&b.density().scale(1.0 - q)))
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Seeded Ginibre density of the requested rank. The support spectrum is
/// mixed with the support projector so every nonzero eigenvalue is at least
/// `1e-3`.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<HermitianOperator> {
    if rank < 1 || rank > dim {
        return domain(format!("rank must lie in [1, {dim}], got {rank}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(dim, rank, &mut rng);
    let w = HermitianOperator::from_hermitian_unchecked(&g * g.adjoint());
    let e = eigh(&w);
    let floor = 1e-3;
    let support: f64 = e.values.iter().skip(dim - rank).sum();
    let spectrum = DVector::from_iterator(
        dim,
        e.values.iter().enumerate().map(|(k, &v)| {
            if k >= dim - rank {
                r((1.0 - rank as f64 * floor) * v / support + floor)
            } else {
                r(0.0)
            }
        }),
    );
    let rho = &e.vectors * DMatrix::from_diagonal(&spectrum) * e.vectors.adjoint();
    Ok(HermitianOperator::from_hermitian_unchecked(rho))
}

/// Seeded Haar-random pure state.
pub fn random_pure(dim: usize, seed: u64) -> Result<PureState> {
    if dim < 1 {
        return domain("state dimension must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PureState::normalized(gaussian_matrix(dim, 1, &mut rng).column(0).into_owned())
}

/// The triplet `(ρ, m, ε)`.
#[derive(Clone, Debug)]
pub struct DistillationInstance {
    pub rho: HermitianOperator,
    pub m: usize,
    pub eps: f64,
}

impl DistillationInstance {
    pub fn new(rho: HermitianOperator, m: usize, eps: f64) -> Result<Self> {
        rho.check_density()?;
        if m < 2 {
            return domain(format!("target dimension must be at least 2, got {m}"));
        }
        if !(0.0..1.0).contains(&eps) {
            return domain(format!("infidelity must lie in [0, 1), got {eps}"));
        }
        Ok(Self { rho, m, eps })
    }

    pub fn pure(state: &PureState, m: usize, eps: f64) -> Result<Self> {
        Self::new(state.density(), m, eps)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `ε ≥ 1 - 1/m`: the maximally mixed output already has the required
    /// fidelity, so the probability is one.
    pub fn is_trivial(&self) -> bool {
        (self.m as f64) * (1.0 - self.eps) <= 1.0 + 1e-12
    }

    pub fn target(&self) -> HermitianOperator {
        smoothed_target(self.m, self.eps).expect("validated instance")
    }
}
