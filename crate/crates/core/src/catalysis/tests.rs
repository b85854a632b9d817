use super::*;
use crate::states::random_density;

fn headline(delta: f64) -> CatalysisInstance {
    let rho = Family::V.density(0.5).unwrap();
    CatalysisInstance::new(rho, max_coherent(2).unwrap(), 2, 0.01, delta).unwrap()
}

#[test]
fn headline_enhancement() {
    let r = p_dio_catalytic_mc(&headline(0.0)).unwrap();
    assert!(r.enhancement_ratio >= 0.115, "{}", r.enhancement_ratio);
    assert!(r.gap <= 1e-7 && r.certificate_residual() <= 1e-7);
    let rep = r.verify(&headline(0.0)).unwrap().unwrap();
    assert!(rep.passes(1e-7), "{rep:?}");
}

#[test]
fn maximally_coherent_input_needs_no_catalyst() {
    let rho = padded_density(&max_coherent(2).unwrap(), 4).unwrap();
    let inst = CatalysisInstance::new(rho, max_coherent(2).unwrap(), 2, 0.0, 0.0).unwrap();
    let r = p_dio_catalytic_mc(&inst).unwrap();
    assert!(
        (r.probability - 1.0).abs() <= 1e-6 && (r.unassisted - 1.0).abs() <= 1e-6,
        "{r:?}"
    );
}

#[test]
fn delta_nesting_and_routes() {
    let a = p_dio_catalytic_mc(&headline(0.0)).unwrap();
    let b = p_dio_catalytic_mc(&headline(0.01)).unwrap();
    assert!(b.probability >= a.probability - 1e-6);
    let pa = p_dio_catalytic_pure(&headline(0.0)).unwrap();
    assert!(
        (pa.probability - a.probability).abs() <= 1e-6,
        "{} {}",
        pa.probability,
        a.probability
    );
    let pb = p_dio_catalytic_pure(&headline(0.01)).unwrap();
    assert!(pb.probability >= b.probability - 1e-6);
    let rep = pb.verify(&headline(0.01)).unwrap().unwrap();
    assert!(rep.passes(1e-7), "{rep:?}");
}

#[test]
fn incoherent_input_stays_at_zero() {
    let rho = HermitianOperator::diagonal(&[0.5, 0.3, 0.2]);
    let gamma = PureState::from_real(&[0.8, 0.6]).unwrap();
    let inst = CatalysisInstance::new(rho, gamma, 2, 0.0, 0.0).unwrap();
    let r = p_dio_catalytic_pure(&inst).unwrap();
    assert!(r.raw <= 1e-7, "{}", r.raw);
}

#[test]
fn oversized_instances_are_rejected() {
    let rho = random_density(5, 5, 1).unwrap();
    let inst = CatalysisInstance::new(rho, max_coherent(2).unwrap(), 2, 0.1, 0.0).unwrap();
    assert!(matches!(p_dio_catalytic_mc(&inst), Err(Error::Resource(_))));
    let bad = CatalysisInstance::new(
        random_density(2, 2, 1).unwrap(),
        PureState::from_real(&[1.0, 0.0]).unwrap(),
        2,
        0.1,
        0.0,
    )
    .unwrap();
    assert!(matches!(p_dio_catalytic_mc(&bad), Err(Error::Domain(_))));
}

#[test]
fn ratio_edge_cases() {
    assert_eq!(enhancement_ratio(0.0, 0.0), 0.0);
    assert!(enhancement_ratio(0.1, 0.0).is_infinite());
    assert!((enhancement_ratio(0.56, 0.5) - 0.12).abs() < 1e-12);
}

#[test]
fn sweep_csv_layout() {
    let t = catalysis_sweep(Family::U, &[0.2, 0.9], &[0.0], 2, 0.01).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.warnings.len(), 1);
    let csv = t.to_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);
    assert!(t.rows.iter().all(|r| r.ratio >= -1e-6), "{:?}", t.rows);
}
