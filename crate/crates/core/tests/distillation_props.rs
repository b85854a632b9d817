//! Cross-route and cross-class properties on random inputs.

use coherdist::analytic::{normalize_amplitudes, p_sio_pure};
use coherdist::distill::{compute, DistillOptions, OpClass, Route};
use coherdist::linalg::{HermitianOperator, C64};
use coherdist::states::{random_density, random_pure, DistillationInstance};
use nalgebra::DMatrix;
use proptest::prelude::*;

const TOL: f64 = 1e-6;
// primal/dual agreement: twice the default gap tolerance
const DUALITY_TOL: f64 = 2e-7;

fn solve(rho: &HermitianOperator, m: usize, eps: f64, class: OpClass, route: Route) -> f64 {
    let inst = DistillationInstance::new(rho.clone(), m, eps).unwrap();
    let r = compute(&inst, class, route, &DistillOptions::default()).unwrap();
    assert!(r.gap <= 1e-7, "{class} {route} gap {}", r.gap);
    r.probability
}

fn density() -> impl Strategy<Value = HermitianOperator> {
    (2usize..=4, any::<u64>()).prop_flat_map(|(d, seed)| {
        (1..=d).prop_map(move |rank| random_density(d, rank, seed).unwrap())
    })
}

fn permutation(d: usize, seed: u64) -> DMatrix<C64> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut p: Vec<usize> = (0..d).collect();
    p.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    DMatrix::from_fn(d, d, |i, j| {
        C64::new(if p[i] == j { 1.0 } else { 0.0 }, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_in_eps_and_mio_dominates(rho in density(), m in 2usize..=3, e1 in 0.0..0.4f64, de in 0.0..0.2f64) {
        let e2 = e1 + de;
        let mio = [e1, e2].map(|e| solve(&rho, m, e, OpClass::Mio, Route::CompactPrimal));
        let dio = [e1, e2].map(|e| solve(&rho, m, e, OpClass::Dio, Route::CompactPrimal));
        prop_assert!(mio[0] <= mio[1] + TOL, "{mio:?}");
        prop_assert!(dio[0] <= dio[1] + TOL, "{dio:?}");
        prop_assert!(mio[0] >= dio[0] - TOL && mio[1] >= dio[1] - TOL);
    }

    #[test]
    fn primal_and_dual_agree(rho in density(), m in 2usize..=3, eps in 0.0..0.45f64) {
        for class in [OpClass::Mio, OpClass::Dio] {
            let p = solve(&rho, m, eps, class, Route::CompactPrimal);
            let d = solve(&rho, m, eps, class, Route::Dual);
            prop_assert!((p - d).abs() <= DUALITY_TOL, "{class}: primal {p}, dual {d}");
        }
    }

    #[test]
    fn smoothed_target_matches_compact(rho in density(), eps in 0.0..0.45f64) {
        for class in [OpClass::Mio, OpClass::Dio] {
            let p = solve(&rho, 2, eps, class, Route::CompactPrimal);
            let c = solve(&rho, 2, eps, class, Route::Choi);
            prop_assert!((p - c).abs() <= TOL, "{class}: compact {p}, choi {c}");
        }
    }

    #[test]
    fn basis_relabeling_is_free(rho in density(), seed in any::<u64>(), eps in 0.0..0.3f64) {
        let permuted = rho.conjugate_by(&permutation(rho.dim(), seed));
        for class in [OpClass::Mio, OpClass::Dio] {
            let a = solve(&rho, 2, eps, class, Route::CompactPrimal);
            let b = solve(&permuted, 2, eps, class, Route::CompactPrimal);
            prop_assert!((a - b).abs() <= TOL, "{class}: {a} vs {b}");
        }
    }

    #[test]
    fn pure_hierarchy(d in 2usize..=5, seed in any::<u64>(), m in 2usize..=5) {
        let psi = random_pure(d, seed).unwrap();
        let sio = p_sio_pure(&normalize_amplitudes(&psi, 1e-12).unwrap(), m);
        let rho = psi.density();
        let dio = solve(&rho, m, 0.0, OpClass::Dio, Route::CompactPrimal);
        let mio = solve(&rho, m, 0.0, OpClass::Mio, Route::CompactPrimal);
        prop_assert!(sio <= dio + TOL && dio <= mio + TOL, "{sio} {dio} {mio}");
    }
}
