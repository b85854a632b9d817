use super::protocol::dephasing_choi;
use super::*;
use crate::linalg::{c, PureState, C64};
use crate::states::{
    example_state, max_coherent, random_density, random_pure, smoothed_target, ExampleState,
};
use nalgebra::DMatrix;

fn inst(rho: HermitianOperator, m: usize, eps: f64) -> DistillationInstance {
    DistillationInstance::new(rho, m, eps).unwrap()
}

fn psi(n: usize) -> HermitianOperator {
    max_coherent(n).unwrap().density()
}

fn main_example(eps: f64) -> DistillationInstance {
    inst(example_state(ExampleState::MainExample).density(), 2, eps)
}

fn assert_close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "got {got}, want {want}");
}

#[test]
fn full_rank_input_gives_zero() {
    for seed in 0..3 {
        let i = inst(random_density(3, 3, seed).unwrap(), 2, 0.0);
        let p = p_mio(&i).unwrap();
        assert!(p.raw <= 1e-7, "{}", p.raw);
        let d = p_mio_dual(&i).unwrap();
        assert!(d.raw <= 1e-7, "{}", d.raw);
    }
}

#[test]
fn identity_transformation() {
    let i = inst(psi(2), 2, 0.0);
    assert_close(p_mio(&i).unwrap().probability, 1.0, 1e-7);
    assert_close(p_mio_dual(&i).unwrap().probability, 1.0, 1e-7);
    assert_close(p_dio(&i).unwrap().probability, 1.0, 1e-7);
}

#[test]
fn main_example_all_routes() {
    let i = main_example(0.1);
    for class in [OpClass::Mio, OpClass::Dio] {
        for route in [Route::CompactPrimal, Route::Dual, Route::Choi] {
            let r = compute(&i, class, route, &DistillOptions::default()).unwrap();
            assert_close(r.probability, 0.5, 1e-6);
            assert!(r.gap <= 1e-7);
            assert!(
                r.certificate_residual() <= 1e-7,
                "{class} {route}: {}",
                r.certificate_residual()
            );
        }
    }
}

#[test]
fn dio_threshold_examples() {
    let p = |eps| p_dio(&inst(psi(2), 3, eps)).unwrap().raw;
    assert_close(p(1.0 / 3.0), 1.0, 1e-6);
    assert!(p(0.2) <= 1e-7);
    let f2 = inst(
        example_state(ExampleState::ThresholdExample).density(),
        3,
        0.30,
    );
    assert!(p_dio(&f2).unwrap().raw <= 1e-7);
    assert!(p_dio_dual(&f2).unwrap().raw <= 1e-7);
}

#[test]
fn dio_forms_agree() {
    let opts = DistillOptions {
        dio_with_g: true,
        ..Default::default()
    };
    for seed in 0..3 {
        let i = inst(random_density(3, 2, seed).unwrap(), 2, 0.15);
        let a = p_dio(&i).unwrap().raw;
        let b = p_dio_with(&i, &opts).unwrap().raw;
        assert_close(a, b, 1e-6);
    }
}

#[test]
fn choi_route_matches_compact() {
    for seed in 0..4 {
        let d = 2 + (seed as usize % 2);
        let m = 2 + (seed as usize / 2);
        let phi = random_pure(d, 100 + seed).unwrap();
        let i = DistillationInstance::pure(&phi, m, 0.05).unwrap();
        for class in [OpClass::Mio, OpClass::Dio] {
            let a = compute(&i, class, Route::CompactPrimal, &DistillOptions::default()).unwrap();
            let b = p_exact_choi(&i.rho, &i.target(), class).unwrap();
            assert_close(a.raw, b.raw, 1e-6);
        }
    }
}

#[test]
fn choi_route_examples() {
    assert_close(
        p_exact_choi(&psi(2), &psi(2), OpClass::Dio).unwrap().raw,
        1.0,
        1e-7,
    );
    let full = random_density(3, 3, 4).unwrap();
    assert!(p_exact_choi(&full, &psi(2), OpClass::Mio).unwrap().raw <= 1e-7);
}

#[test]
fn primal_and_dual_agree() {
    for seed in 0..4 {
        let rho = random_density(3, 2, 10 + seed).unwrap();
        for eps in [0.0, 0.1, 0.3] {
            let i = inst(rho.clone(), 3, eps);
            assert_close(p_mio(&i).unwrap().raw, p_mio_dual(&i).unwrap().raw, 1e-6);
            assert_close(p_dio(&i).unwrap().raw, p_dio_dual(&i).unwrap().raw, 1e-6);
        }
    }
}

#[test]
fn complex_inputs_use_the_doubled_embedding() {
    let phi = random_pure(3, 77).unwrap();
    let i = DistillationInstance::pure(&phi, 2, 0.1).unwrap();
    let r = p_mio(&i).unwrap();
    assert!(r.certificate.as_ref().unwrap().embedded.doubled);
    let forced = DistillOptions {
        embedding: EmbeddingMode::ForceDoubled,
        ..Default::default()
    };
    let real = PureState::from_real(&phi.moduli()).unwrap();
    let ri = DistillationInstance::pure(&real, 2, 0.1).unwrap();
    let a = p_mio(&ri).unwrap();
    let b = p_mio_with(&ri, &forced).unwrap();
    assert_close(a.raw, b.raw, 1e-7);
    // only moduli matter for pure inputs under diagonal unitaries
    assert_close(r.raw, a.raw, 1e-6);
}

#[test]
fn monotone_in_eps_and_ordered_by_class() {
    let rho = random_density(3, 2, 21).unwrap();
    let mut prev = [0.0f64; 2];
    for k in 0..7 {
        let eps = 0.05 * k as f64;
        let i = inst(rho.clone(), 3, eps);
        let pm = p_mio(&i).unwrap().raw;
        let pd = p_dio(&i).unwrap().raw;
        assert!(pm >= pd - 1e-6);
        assert!(pm >= prev[0] - 1e-6 && pd >= prev[1] - 1e-6);
        prev = [pm, pd];
    }
}

#[test]
fn permutation_invariance() {
    let rho = random_density(3, 2, 5).unwrap();
    let perm = DMatrix::from_fn(3, 3, |i, j| {
        if (i + 1) % 3 == j {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let permuted = rho.conjugate_by(&perm);
    for class in [OpClass::Mio, OpClass::Dio] {
        let a = compute(
            &inst(rho.clone(), 2, 0.1),
            class,
            Route::CompactPrimal,
            &Default::default(),
        )
        .unwrap();
        let b = compute(
            &inst(permuted.clone(), 2, 0.1),
            class,
            Route::CompactPrimal,
            &Default::default(),
        )
        .unwrap();
        assert_close(a.raw, b.raw, 1e-6);
    }
}

#[test]
fn discontinuity_witness() {
    assert_close(
        p_exact_choi(&psi(2), &psi(2), OpClass::Mio).unwrap().raw,
        1.0,
        1e-6,
    );
    for delta in [1e-1, 1e-2, 1e-3] {
        let noisy = smoothed_target(2, delta).unwrap();
        let r = p_mio(&inst(noisy, 2, 0.0)).unwrap();
        assert!(r.raw <= 1e-7, "delta {delta}: {}", r.raw);
    }
}

#[test]
fn trivial_regime_short_circuits() {
    let r = p_mio(&inst(HermitianOperator::diagonal(&[1.0, 0.0]), 2, 0.5)).unwrap();
    assert!(r.trivial && r.probability == 1.0 && r.certificate.is_none());
}

#[test]
fn extracted_protocol_reproduces_target() {
    let i = main_example(0.1);
    for class in [OpClass::Mio, OpClass::Dio] {
        let r = compute(&i, class, Route::CompactPrimal, &Default::default()).unwrap();
        let ops = r.operators.as_ref().unwrap();
        let j = extract_protocol(&i, &ops.g, &ops.c).unwrap();
        // apply-channel oracle, written out from the Choi convention
        let mut out = DMatrix::<C64>::zeros(2, 2);
        for a in 0..2 {
            for a2 in 0..2 {
                for b in 0..2 {
                    for b2 in 0..2 {
                        out[(b, b2)] += i.rho.get(a, a2) * j.j.get(a * 2 + b, a2 * 2 + b2);
                    }
                }
            }
        }
        let want = i.target().scale(0.5);
        assert!((out - want.matrix()).camax() < 1e-6);
        let rep = verify_protocol(&j, class, &i.rho, r.probability, &i.target()).unwrap();
        assert!(rep.passes(PROTOCOL_TOL), "{rep:?}");
    }
}

#[test]
fn zero_protocol() {
    let i = main_example(0.1);
    let z = HermitianOperator::zeros(2);
    let j = extract_protocol(&i, &z, &z).unwrap();
    assert_eq!(j.j.operator_norm(), 0.0);
}

#[test]
fn twirled_structure() {
    let i = inst(psi(2), 2, 0.0);
    let j = extract_protocol(&i, &HermitianOperator::identity(2), &psi(2)).unwrap();
    for a in 0..2 {
        for a2 in 0..2 {
            let img = j.image_of_unit(a, a2);
            // αΨ₂ + β(1 - Ψ₂): equal diagonals, real symmetric off-diagonals
            assert!((img[(0, 0)] - img[(1, 1)]).norm() < 1e-12);
            assert!((img[(0, 1)] - img[(1, 0)]).norm() < 1e-12);
        }
    }
    assert!(verify_protocol(&j, OpClass::Mio, &i.rho, 1.0, &psi(2))
        .unwrap()
        .passes(1e-9));
}

#[test]
fn infeasible_pair_is_rejected() {
    let i = main_example(0.1);
    let err = extract_protocol(
        &i,
        &HermitianOperator::identity(2).scale(2.0),
        &HermitianOperator::identity(2),
    );
    assert!(matches!(err, Err(Error::Domain(msg)) if msg.contains("G ⪯ 1")));
}

#[test]
fn membership_of_known_channels() {
    let deph = dephasing_choi(3);
    let rho = random_density(3, 3, 1).unwrap();
    let out = crate::linalg::dephase(&rho);
    for class in [OpClass::Mio, OpClass::Dio] {
        let rep = verify_channel(&deph, class, &rho, &out).unwrap();
        assert!(rep.passes(1e-12), "{rep:?}");
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
    let hj = ChoiMatrix::from_kraus(&[h]).unwrap();
    let zero = HermitianOperator::diagonal(&[1.0, 0.0]);
    let rep = verify_channel(&hj, OpClass::Mio, &zero, &psi(2)).unwrap();
    assert!(rep.action < 1e-12 && rep.trace < 1e-12);
    assert!(rep.membership > 0.4);
}

#[test]
fn result_json_fields() {
    let r = p_mio(&main_example(0.1)).unwrap();
    let v = r.to_json();
    for k in [
        "class",
        "route",
        "d",
        "m",
        "eps",
        "probability",
        "gap",
        "status",
        "wall_time_ms",
    ] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    assert_eq!(v["class"], "MIO");
    assert_eq!(v["route"], "compact_primal");
    assert_eq!(v["status"], "Optimal");
}

#[test]
fn pure_inputs_at_zero_eps() {
    for seed in 0..6u64 {
        let d = 2 + seed as usize % 4;
        let phi = random_pure(d, 300 + seed).unwrap();
        let sio = crate::analytic::p_sio_pure(
            &crate::analytic::normalize_amplitudes(&phi, 1e-12).unwrap(),
            3,
        );
        let i = DistillationInstance::pure(&phi, 3, 0.0).unwrap();
        let pm = p_mio(&i).unwrap();
        let pd = p_dio(&i).unwrap();
        assert!(pm.gap <= 1e-7 && pd.gap <= 1e-7);
        assert_close(pm.raw, p_mio_dual(&i).unwrap().raw, 1e-6);
        assert_close(pd.raw, p_dio_dual(&i).unwrap().raw, 1e-6);
        assert_close(pd.raw, sio, 1e-6);
        for r in [&pm, &pd] {
            let ops = r.operators.as_ref().unwrap();
            let j = extract_protocol(&i, &ops.g, &ops.c).unwrap();
            let rep = verify_protocol(&j, r.class, &i.rho, r.probability, &i.target()).unwrap();
            assert!(rep.passes(PROTOCOL_TOL), "{rep:?}");
        }
    }
}

// At eps = 1 - n/m the optimal C is t·ww† with w_i = 1/conj(φ_i) and
// t = min |φ_i|²/m, so P_DIO = n·min |φ_i|².
fn dio_at_threshold_oracle(phi: &PureState) -> f64 {
    let mods = phi.moduli();
    let min = mods.iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    mods.len() as f64 * min
}

#[test]
fn dio_on_the_sudden_death_boundary() {
    for seed in 0..4u64 {
        let n = 2 + seed as usize % 3;
        let phi = random_pure(n, 700 + seed).unwrap();
        for m in n + 1..=n + 2 {
            let eps = 1.0 - n as f64 / m as f64;
            let i = inst(phi.density(), m, eps);
            let r = p_dio(&i).unwrap();
            assert!(r.gap <= 1e-7 && r.certificate_residual() <= 1e-7);
            assert_close(r.raw, dio_at_threshold_oracle(&phi), 1e-6);
            let ops = r.operators.as_ref().unwrap();
            let j = extract_protocol(&i, &ops.g, &ops.c).unwrap();
            let rep =
                verify_protocol(&j, OpClass::Dio, &i.rho, r.probability, &i.target()).unwrap();
            assert!(rep.passes(PROTOCOL_TOL), "{rep:?}");
        }
    }
    let state = example_state(ExampleState::ThresholdExample);
    let r = p_dio(&inst(state.density(), 3, 1.0 / 3.0)).unwrap();
    assert_close(r.raw, 0.2, 1e-7);
}
