mod common;

use proptest::prelude::*;

use common::{heat_for, operator};
use evoeq::linalg::{lambda_min_hermitian, op_norm, CMat, CVec, C64};
use evoeq::material::{coercivity_lower_bound, heat_law, line_samples, project_law, MaterialLaw};
use evoeq::spatial::verify::Quadrature;
use evoeq::spatial::{GalerkinScheme, Instance};

fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.shape() == b.shape() && (a - b).iter().all(|c| c.norm() <= tol)
}

#[test]
fn heat_law_at_sample_points() {
    let law = heat_law(1, 1).unwrap();
    let diag = |a: C64, b: C64| CMat::from_diagonal(&CVec::from_vec(vec![a, b]));
    assert!(close(
        &law.eval(C64::from(1.0)),
        &diag(C64::from(1.0), C64::from(1.0)),
        1e-15
    ));
    assert!(close(
        &law.eval(C64::from(2.0)),
        &diag(C64::from(1.0), C64::from(0.5)),
        1e-15
    ));
    let zm = law.z_m(C64::from(2.0));
    assert!(close(&zm, &diag(C64::from(2.0), C64::from(1.0)), 1e-15));
    assert!((op_norm(&zm) - 2.0).abs() < 1e-14);
    // 1/(0.5 + i) = (0.5 - i)/1.25
    let z = C64::new(0.5, 1.0);
    assert!(close(&law.eval(z), &diag(C64::from(1.0), C64::new(0.4, -0.8)), 1e-15));
}

#[test]
fn coercivity_of_heat_law_at_sample_weights() {
    let law = heat_law(1, 1).unwrap();
    for (nu, c) in [(0.5, 0.5), (2.0, 1.0)] {
        let report = coercivity_lower_bound(&law, nu, &line_samples(nu, None)).unwrap();
        assert!((report.c_estimate - c).abs() < 1e-9);
    }
    let zero = coercivity_lower_bound(&MaterialLaw::zero(2), 1.0, &line_samples(1.0, None)).unwrap();
    assert_eq!(zero.c_estimate, 0.0);
    assert!(!zero.is_coercive());
}

/// `⟨φ_i, M(z) φ_j⟩` assembled from pointwise mode values.
fn quadrature_projection(law: &MaterialLaw, scheme: &GalerkinScheme, z: C64) -> CMat {
    let op = scheme.operator();
    let m = law.eval(z);
    let quad = Quadrature::unit_cube(1, 2);
    let values: Vec<Vec<Vec<C64>>> = scheme
        .selected()
        .iter()
        .map(|&i| quad.points.iter().map(|x| op.mode(i).field.eval(x)).collect())
        .collect();
    let n = scheme.n_total();
    CMat::from_fn(n, n, |i, j| {
        quad.integrate(values[i].iter().zip(&values[j]).map(|(a, b)| {
            let mb: Vec<C64> = (0..m.nrows())
                .map(|p| (0..m.ncols()).map(|q| m[(p, q)] * b[q]).sum())
                .collect();
            a.iter().zip(&mb).map(|(x, y)| x.conj() * y).sum()
        }))
    })
}

#[test]
fn projection_matches_quadrature_of_mode_fields() {
    for inst in [Instance::Mixed1d, Instance::Periodic1d] {
        let op = operator(inst, 24);
        let law = heat_for(&op);
        let full = GalerkinScheme::full(op.clone());
        let z = C64::new(1.3, -4.0);
        let m = project_law(&law, &full, z).unwrap();
        assert!(close(&m, &quadrature_projection(&law, &full, z), 1e-12));
    }
}

#[test]
fn mixed_pair_block_has_half_entries() {
    let op = operator(Instance::Mixed1d, 16);
    let scheme = GalerkinScheme::build(op.clone(), 1, 0).unwrap();
    let z = C64::new(0.7, 2.0);
    let zm = project_law(&heat_for(&op), &scheme, z).unwrap() * z;
    let half = C64::from(0.5);
    let expected = CMat::from_row_slice(
        2,
        2,
        &[z * half + half, z * half - half, z * half - half, z * half + half],
    );
    assert!(close(&zm, &expected, 1e-14));
}

#[test]
fn identity_law_projects_to_identity() {
    let op = operator(Instance::DirichletSquare2d, 48);
    let scheme = GalerkinScheme::build(op, 6, 6).unwrap();
    let m = project_law(&MaterialLaw::identity(3), &scheme, C64::new(1.0, 3.0)).unwrap();
    assert!(close(&m, &CMat::identity(18, 18), 1e-14));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compressed_law_is_uniformly_bounded(
        inst in 0..3usize,
        n in 1..12usize,
        re in 0.01..20.0f64,
        im in -200.0..200.0f64,
    ) {
        let op = operator([Instance::Mixed1d, Instance::Periodic1d, Instance::DirichletSquare2d][inst], 96);
        let scheme = GalerkinScheme::build(op.clone(), n, n.min(op.kernel_count())).unwrap();
        let z = C64::new(re, im);
        let zm = project_law(&heat_for(&op), &scheme, z).unwrap() * z;
        prop_assert!(op_norm(&zm) <= z.norm().max(1.0) * (1.0 + 1e-12));
    }

    #[test]
    fn estimate_never_exceeds_a_rayleigh_quotient(
        nu in 0.05..5.0f64,
        im in -50.0..50.0f64,
        h in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2),
    ) {
        let law = heat_law(1, 1).unwrap();
        let z = C64::new(nu, im);
        let report = coercivity_lower_bound(&law, nu, &[z]).unwrap();
        let h = CVec::from_iterator(2, h.iter().map(|&(a, b)| C64::new(a, b)));
        prop_assume!(h.norm() > 1e-3);
        let q = (h.adjoint() * law.z_m(z) * &h)[(0, 0)].re / h.norm_squared();
        prop_assert!(report.c_estimate <= q + 1e-12);
        let herm = (law.z_m(z) + law.z_m(z).adjoint()) * C64::from(0.5);
        prop_assert!((report.c_estimate - lambda_min_hermitian(&herm).max(0.0)).abs() <= 1e-12);
    }
}
