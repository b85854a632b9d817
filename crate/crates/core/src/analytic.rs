//! Closed forms for pure inputs: (S)IO probability, qubit targets, MIO lower
//! bounds and the DIO feasibility threshold.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::PureState;

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Nonzero moduli of a pure state, sorted nonincreasing and renormalized.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SortedAmplitudes {
    values: Vec<f64>,
}

impl SortedAmplitudes {
    /// From arbitrary real magnitudes (signs are dropped). Entries with
    /// squared modulus below `zero_tol` after normalization are discarded.
    pub fn from_moduli(moduli: &[f64], zero_tol: f64) -> Result<Self> {
        let norm2: f64 = moduli.iter().map(|v| v * v).sum();
        if !norm2.is_finite() || norm2 <= 0.0 {
            return domain("amplitude vector is zero or not finite");
        }
        let mut values: Vec<f64> = moduli
            .iter()
            .map(|v| v.abs() / norm2.sqrt())
            .filter(|v| v * v >= zero_tol)
            .collect();
        if values.is_empty() {
            return domain("all amplitudes are below the zero tolerance");
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let n2: f64 = values.iter().map(|v| v * v).sum();
        values.iter_mut().for_each(|v| *v /= n2.sqrt());
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of nonzero coefficients.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_uniform(&self, tol: f64) -> bool {
        let u = 1.0 / (self.n() as f64).sqrt();
        self.values.iter().all(|v| (v - u).abs() <= tol)
    }
}

pub fn normalize_amplitudes(psi: &PureState, zero_tol: f64) -> Result<SortedAmplitudes> {
    SortedAmplitudes::from_moduli(&psi.moduli(), zero_tol)
}

/// Optimal success probability of `φ → Ψ_m` at zero error under SIO / IO.
pub fn p_sio_pure(a: &SortedAmplitudes, m: usize) -> f64 {
    let n = a.n();
    if m == 0 || n < m {
        return 0.0;
    }
    let sq: Vec<f64> = a.values.iter().map(|v| v * v).collect();
    (1..=m)
        .map(|k| {
            // 1-based indices m-k+1 ..= n
            let tail: f64 = sq[m - k..].iter().sum();
            m as f64 / k as f64 * tail
        })
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QubitTarget {
    pub probability: f64,
    /// Infidelity at and above which the transformation is deterministic.
    pub eps0: f64,
    /// `eps >= 1/2`: fidelity 1/2 is reachable for free.
    pub trivial: bool,
}

/// `ε₀(φ₁)`: smallest infidelity reachable deterministically for a qubit target.
pub fn qubit_eps0(a: &SortedAmplitudes) -> f64 {
    let p1 = a.values[0];
    if p1 <= std::f64::consts::FRAC_1_SQRT_2 {
        0.0
    } else {
        0.5 - p1 * (1.0 - p1 * p1).max(0.0).sqrt()
    }
}

/// Success probability of `φ → Ψ₂` at infidelity `eps`, for MIO and DIO alike.
pub fn p_qubit_target(a: &SortedAmplitudes, eps: f64) -> Result<QubitTarget> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("infidelity {eps} outside [0, 1]"));
    }
    let eps0 = qubit_eps0(a);
    if eps >= 0.5 {
        return Ok(QubitTarget {
            probability: 1.0,
            eps0,
            trivial: true,
        });
    }
    let probability = if eps >= eps0 {
        1.0
    } else {
        let p1 = a.values[0];
        let f = ((1.0 - eps).sqrt() + eps.sqrt()) / (1.0 - 2.0 * eps);
        (2.0 * (1.0 - p1 * p1) * f * f).clamp(0.0, 1.0)
    };
    Ok(QubitTarget {
        probability,
        eps0,
        trivial: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MioLowerBound {
    pub tight: f64,
    pub weak: f64,
}

/// Lower bounds on the zero-error MIO probability of a pure input.
pub fn mio_pure_lower_bound(a: &SortedAmplitudes, m: usize) -> Result<MioLowerBound> {
    let n = a.n();
    if n < 2 {
        return domain("lower bound needs at least two nonzero amplitudes");
    }
    if m < 2 {
        return domain("target dimension must be at least 2");
    }
    let s: f64 = a.values.iter().map(|v| v.powi(-2)).sum();
    // phases cancel in the operator norm, so moduli suffice
    let t: Vec<f64> = a.values.iter().map(|v| 1.0 / (v * s.sqrt())).collect();
    let (nf, mf) = (n as f64, m as f64);
    let w_off = (nf - mf) / (nf - 1.0);
    let w_diag = nf * (mf - 1.0) / (nf - 1.0);
    let op = DMatrix::from_fn(n, n, |i, j| {
        let p = t[i] * t[j];
        if i == j {
            (w_off + w_diag) * p
        } else {
            w_off * p
        }
    });
    let norm = op.symmetric_eigenvalues().amax();
    Ok(MioLowerBound {
        tight: nf * nf / s / norm,
        weak: nf * nf / (mf * s),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Threshold {
    Positive,
    Zero,
    One,
}

// Relative slack for the rational boundary eps = 1 - n/m.
const BOUNDARY_TOL: f64 = 1e-12;

/// DIO feasibility class of `φ → Ψ_m` for a pure input with `n` nonzero
/// coefficients; `maximally_coherent` marks `φ = Ψ_n`.
pub fn dio_threshold(n: usize, m: usize, eps: f64, maximally_coherent: bool) -> Threshold {
    let below = n < m && (m as f64) * eps < (m - n) as f64 - BOUNDARY_TOL;
    if below {
        Threshold::Zero
    } else if maximally_coherent && n <= m {
        Threshold::One
    } else {
        Threshold::Positive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{example_state, max_coherent, ExampleState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn amps(v: &[f64]) -> SortedAmplitudes {
        SortedAmplitudes::from_moduli(v, DEFAULT_ZERO_TOL).unwrap()
    }

    #[test]
    fn normalization_examples() {
        let a = amps(&[1.0, -1.0]);
        assert_eq!(a.n(), 2);
        assert_abs_diff_eq!(a.values()[1], 0.5f64.sqrt(), epsilon = 1e-15);
        let b = normalize_amplitudes(
            &example_state(ExampleState::ThresholdExample),
            DEFAULT_ZERO_TOL,
        )
        .unwrap();
        assert_abs_diff_eq!(b.values()[0], 3.0 / 10f64.sqrt(), epsilon = 1e-15);
        let c = amps(&[1.0, 1e-9, 0.0]);
        assert_eq!(c.n(), 1);
        assert!(SortedAmplitudes::from_moduli(&[0.0, 0.0], DEFAULT_ZERO_TOL).is_err());
    }

    // brute-force minimum over k, written directly from the 1-based formula
    fn sio_oracle(a: &[f64], m: usize) -> f64 {
        if a.len() < m {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for k in 1..=m {
            let mut tail = 0.0;
            for i in (m - k + 1)..=a.len() {
                tail += a[i - 1] * a[i - 1];
            }
            best = best.min(m as f64 / k as f64 * tail);
        }
        best
    }

    #[test]
    fn sio_examples() {
        let u = amps(&[1.0; 4]);
        for m in 2..=4 {
            assert_abs_diff_eq!(p_sio_pure(&u, m), 1.0, epsilon = 1e-14);
        }
        let a = amps(&[3.0, 1.0]);
        assert_abs_diff_eq!(p_sio_pure(&a, 2), 0.2, epsilon = 1e-14);
        assert_eq!(p_sio_pure(&a, 3), 0.0);
    }

    #[test]
    fn qubit_target_examples() {
        let a = amps(&[3.0, 1.0]);
        let r = p_qubit_target(&a, 0.1).unwrap();
        assert_abs_diff_eq!(r.probability, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eps0, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            p_qubit_target(&a, 0.2).unwrap().probability,
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            p_qubit_target(&amps(&[1.0, 1.0]), 0.0).unwrap().probability,
            1.0
        );
        assert!(p_qubit_target(&a, 0.6).unwrap().trivial);
    }

    #[test]
    fn lower_bound_examples() {
        let b = mio_pure_lower_bound(&amps(&[1.0, 1.0]), 3).unwrap();
        assert_abs_diff_eq!(b.tight, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.weak, 1.0 / 3.0, epsilon = 1e-12);
        for n in 2..6 {
            for m in n + 1..9 {
                let u = normalize_amplitudes(&max_coherent(n).unwrap(), DEFAULT_ZERO_TOL).unwrap();
                let b = mio_pure_lower_bound(&u, m).unwrap();
                assert_abs_diff_eq!(b.tight, (n - 1) as f64 / (m - 1) as f64, epsilon = 1e-12);
            }
        }
        assert!(mio_pure_lower_bound(&amps(&[1.0]), 2).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(dio_threshold(2, 3, 0.30, false), Threshold::Zero);
        assert_eq!(dio_threshold(2, 3, 1.0 / 3.0, false), Threshold::Positive);
        assert_eq!(dio_threshold(2, 3, 1.0 / 3.0, true), Threshold::One);
        for eps in [0.0, 0.2, 0.5] {
            assert_eq!(dio_threshold(4, 3, eps, false), Threshold::Positive);
        }
    }

    proptest! {
        #[test]
        fn sio_matches_oracle(v in proptest::collection::vec(0.01f64..1.0, 1..7), m in 2usize..7) {
            let a = amps(&v);
            let want = sio_oracle(a.values(), m);
            prop_assert!((p_sio_pure(&a, m) - want.clamp(0.0, 1.0)).abs() < 1e-12);
        }

        #[test]
        fn bounds_are_ordered(v in proptest::collection::vec(0.01f64..1.0, 2..7), m in 2usize..9) {
            let b = mio_pure_lower_bound(&amps(&v), m).unwrap();
            prop_assert!(b.weak > 0.0);
            prop_assert!(b.tight >= b.weak - 1e-12);
        }

        #[test]
        fn qubit_probability_increases_with_eps(v in proptest::collection::vec(0.01f64..1.0, 2..6), e in 0.0f64..0.44) {
            let a = amps(&v);
            let p1 = p_qubit_target(&a, e).unwrap().probability;
            let p2 = p_qubit_target(&a, e + 0.05).unwrap().probability;
            prop_assert!(p1 <= p2 + 1e-12);
        }
    }
}
