use super::*;
use crate::linalg::{c, eigh, embed_matrix, HermitianOperator};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    HermitianOperator::new((&a + a.adjoint()).scale(0.5)).unwrap()
}

fn lp() -> ConicProgram {
    let mut p = ConicProgram::new(vec![Cone::Nonneg(2)]);
    let mut obj = LinearMap::new();
    obj.lin(0, 0, 1.0);
    p.set_objective(obj);
    let mut row = LinearMap::new();
    row.lin(0, 0, 1.0).lin(0, 1, 1.0);
    p.add_constraint(row, 1.0);
    p
}

fn trace_bound() -> ConicProgram {
    let mut p = ConicProgram::new(vec![Cone::Psd(2), Cone::Nonneg(1)]);
    let mut obj = LinearMap::new();
    obj.sym(0, 0, 0, 1.0).sym(0, 1, 1, 1.0);
    p.set_objective(obj);
    let mut row = LinearMap::new();
    row.sym(0, 0, 0, 1.0).sym(0, 1, 1, 1.0).lin(1, 0, 1.0);
    p.add_constraint(row, 3.0);
    p
}

/// maximize <H, X> s.t. tr X = 1, X ⪰ 0 (value = largest eigenvalue of H).
fn lambda_max_program(h: &HermitianOperator) -> HermitianProgram {
    let mut hp = HermitianProgram::new();
    let x = hp.add_psd(h.dim());
    let mut obj = HermitianMap::new();
    obj.trace_with(x, h, 1.0);
    hp.set_objective(obj);
    let mut tr = HermitianMap::new();
    tr.trace_with(x, &HermitianOperator::identity(h.dim()), 1.0);
    hp.add_constraint(tr, 1.0);
    hp
}

#[test]
fn linear_program() {
    let p = lp();
    let sol = solve(&p, &SolveOptions::default());
    assert!(sol.is_optimal(), "{sol:?}");
    assert!((sol.primal_value - 1.0).abs() < 1e-8);
    assert!((sol.dual_value - 1.0).abs() < 1e-8);
    let cert = check_certificate(&p, &sol);
    assert!(cert.max_residual() <= 1e-8, "{cert:?}");
}

#[test]
fn trace_bound_program() {
    let p = trace_bound();
    let sol = solve(&p, &SolveOptions::default());
    assert!(sol.is_optimal());
    assert!((sol.primal_value - 3.0).abs() < 1e-7);
    assert!(check_certificate(&p, &sol).max_residual() <= 1e-8);
}

#[test]
fn lambda_max_matches_eigensolver() {
    for seed in 0..5 {
        let h = random_hermitian(3, seed);
        let emb = embed_hermitian(&lambda_max_program(&h), EmbeddingMode::Auto).unwrap();
        assert!(emb.doubled);
        let sol = solve(&emb.program, &SolveOptions::default());
        assert!(sol.is_optimal());
        let want = eigh(&h).values[2];
        assert!(
            (sol.primal_value - want).abs() < 1e-7,
            "{} vs {want}",
            sol.primal_value
        );
        let cert = check_certificate(&emb.program, &sol);
        assert!(cert.gap <= 1e-8, "{cert:?}");

        let x = emb.recover(&sol.x);
        let xh = x[0].as_psd().unwrap();
        assert!((xh.trace() - 1.0).abs() < 1e-7);
        assert!((xh.inner(&h) - want).abs() < 1e-7);
    }
}

#[test]
fn real_data_keeps_block_size() {
    let h = HermitianOperator::from_real_rows(2, &[1.0, 0.5, 0.5, -1.0]).unwrap();
    let emb = embed_hermitian(&lambda_max_program(&h), EmbeddingMode::Auto).unwrap();
    assert!(!emb.doubled);
    assert_eq!(emb.program.blocks(), &[Cone::Psd(2)]);
    let forced = embed_hermitian(&lambda_max_program(&h), EmbeddingMode::ForceDoubled).unwrap();
    assert_eq!(forced.program.blocks(), &[Cone::Psd(4)]);
    let a = solve(&emb.program, &SolveOptions::default());
    let b = solve(&forced.program, &SolveOptions::default());
    assert!((a.primal_value - b.primal_value).abs() < 1e-7);
    assert!((a.primal_value - 1.25f64.sqrt()).abs() < 1e-7);
}

#[test]
fn one_by_one_complex_block() {
    let mut hp = HermitianProgram::new();
    let b = hp.add_psd(1);
    let mut row = HermitianMap::new();
    row.entry(b, 0, 0, c(1.0, 0.0));
    hp.add_constraint(row.clone(), 2.0);
    hp.set_objective(row);
    let emb = embed_hermitian(&hp, EmbeddingMode::ForceDoubled).unwrap();
    assert_eq!(emb.program.blocks(), &[Cone::Psd(2)]);
    let sol = solve(&emb.program, &SolveOptions::default());
    let y = sol.x[0].as_psd().unwrap();
    assert!((y[(0, 0)] - 2.0).abs() < 1e-7 && (y[(1, 1)] - 2.0).abs() < 1e-7);
    assert!(y[(0, 1)].abs() < 1e-7);
    assert!((sol.primal_value - 2.0).abs() < 1e-7);
}

#[test]
fn embedding_doubles_spectrum() {
    let h = random_hermitian(4, 11);
    let mut ev: Vec<f64> = embed_matrix(&h)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    let want = eigh(&h).values;
    for (k, v) in ev.iter().enumerate() {
        assert!((v - want[k / 2]).abs() < 1e-10);
    }
}

#[test]
fn perturbed_certificate_is_flagged() {
    let p = trace_bound();
    let mut sol = solve(&p, &SolveOptions::default());
    if let BlockValue::Psd(m) = &mut sol.x[0] {
        m[(0, 0)] += 1e-3;
    }
    assert!(check_certificate(&p, &sol).primal_residual >= 1e-4);
}

#[test]
fn deterministic() {
    let emb = embed_hermitian(
        &lambda_max_program(&random_hermitian(3, 5)),
        EmbeddingMode::Auto,
    )
    .unwrap();
    let a = solve(&emb.program, &SolveOptions::default());
    let b = solve(&emb.program, &SolveOptions::default());
    assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
    assert_eq!(a.y, b.y);
    assert_eq!(a.x, b.x);
}

#[test]
fn inconsistent_zero_row_fails() {
    let mut p = lp();
    p.add_constraint(LinearMap::new(), 1.0);
    let sol = solve(&p, &SolveOptions::default());
    assert_eq!(sol.status, SolveStatus::NumericalFailure);
    assert!(!sol.message.is_empty());
}

#[test]
fn redundant_rows_get_zero_multiplier() {
    let mut p = trace_bound();
    let mut row = LinearMap::new();
    row.sym(0, 0, 0, 2.0).sym(0, 1, 1, 2.0).lin(1, 0, 2.0);
    p.add_constraint(row, 6.0);
    let sol = solve(&p, &SolveOptions::default());
    assert!(sol.is_optimal());
    assert_eq!(sol.y[1], 0.0);
    assert!(check_certificate(&p, &sol).max_residual() <= 1e-8);
}

#[test]
fn json_dump_is_dense_row_major() {
    let mut p = ConicProgram::new(vec![Cone::Psd(2)]);
    let mut row = LinearMap::new();
    row.sym(0, 1, 0, 3.0);
    p.add_constraint(row, 1.0);
    let v = p.to_json();
    assert_eq!(v["blocks"][0]["kind"], "psd");
    assert_eq!(
        v["constraints"][0]["coefficients"][0],
        serde_json::json!([0.0, 3.0, 3.0, 0.0])
    );
    assert_eq!(v["constraints"][0]["rhs"], 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_duality_and_optimality(seed in 0u64..1000, n in 2usize..5) {
        let h = random_hermitian(n, seed);
        let emb = embed_hermitian(&lambda_max_program(&h), EmbeddingMode::Auto).unwrap();
        let opts = SolveOptions::default();
        let sol = solve(&emb.program, &opts);
        prop_assert!(sol.is_optimal());
        let scale = 1.0 + sol.primal_value.abs() + sol.dual_value.abs();
        prop_assert!((sol.dual_value - sol.primal_value).abs() <= 10.0 * opts.gap_tol * scale);
        prop_assert!(sol.x.iter().all(|b| b.min_cone_value() >= -1e-9));
    }
}
