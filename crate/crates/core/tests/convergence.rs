mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use common::*;
use evoeq::convergence::{
    convergence_sweep, derive_seed, manufactured_forcing, manufactured_solution, oracle_resolvent_convergence,
    random_datum, strong_convergence_defect, Excitation, OracleInstance, SchemeSymbol, SweepOptions, TimeProfile,
};
use evoeq::linalg::{CVec, C64};
use evoeq::spaces::{weighted_norm, TimeGrid, WeightedSignal};
use evoeq::spatial::{GalerkinScheme, Instance};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_rate_inequalities_hold(seed in any::<u64>(), m in 1..24usize, c in 0.05..1.0f64, spread in 1.0..8.0f64) {
        let inst = OracleInstance::generate(m, c, c * spread, seed).unwrap();
        let report = oracle_resolvent_convergence(&inst, &random_datum(m, derive_seed(seed, 1))).unwrap();
        prop_assert!(report.all_invertible);
        prop_assert!(report.pass(), "failing checks {:?}", report.table.failing_checks());
    }

    #[test]
    fn oracle_error_splits_into_consistency_and_projection(seed in any::<u64>(), m in 2..16usize, n_frac in 0.0..1.0f64) {
        let n = 1 + ((m - 1) as f64 * n_frac) as usize;
        let inst = OracleInstance::generate(m, 0.4, 3.0, seed).unwrap();
        let f = random_datum(m, derive_seed(seed, 1));
        let k = &inst.t + &inst.a;
        let w = k.clone().lu().solve(&f).unwrap();
        let q = inst.basis.columns(0, n).into_owned();
        let (tn, an) = inst.compress(n);
        let kn = tn + an;
        let lu = kn.clone().lu();
        let err = &q * lu.solve(&(q.adjoint() * &f)).unwrap() - &w;
        let pw = q.adjoint() * &w;
        let consistency = q.adjoint() * (&k * &w) - &kn * &pw;
        let split = &q * lu.solve(&consistency).unwrap() + (&q * &pw - &w);
        prop_assert!((&err - &split).norm() <= 1e-10 * w.norm().max(1.0));
        let defect = inst.defect(n, &w);
        prop_assert!((defect.consistency - consistency.norm()).abs() <= 1e-10 * w.norm().max(1.0));
    }
}

fn sin8_and_derivative(a: f64, b: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let w = PI / (b - a);
    let inside = move |t: f64| t > a && t < b;
    (
        move |t| if inside(t) { (w * (t - a)).sin().powi(8) } else { 0.0 },
        move |t| {
            if inside(t) {
                8.0 * w * (w * (t - a)).sin().powi(7) * (w * (t - a)).cos()
            } else {
                0.0
            }
        },
    )
}

#[test]
fn kernel_modes_are_forced_by_their_law_block() {
    // θ-kernel constant: zM = z, so f = u'; q-kernel constant: zM = 1, so f = u
    let g = TimeGrid::new(8.0, 1024, 2.5).unwrap();
    let op = operator(Instance::Periodic1d, 16);
    let problem = heat_problem(op.clone(), g);
    let full = SchemeSymbol::full(&problem).unwrap();
    let exc = Excitation {
        n_pairs: 0,
        n_kernel: 2,
        decay: 1.0,
        profile: TimeProfile::Sin8 { start: 1.0, end: 3.0 },
    };
    let u = manufactured_solution(&g, &op, &exc).unwrap();
    let f = manufactured_forcing(&problem, &full, &u).unwrap();
    let (s, ds) = sin8_and_derivative(1.0, 3.0);
    let (c0, c1) = (exc.coefficient(&op, 0), exc.coefficient(&op, 1));
    let expected = WeightedSignal::from_fn(g, 16, |k, row| {
        let t = g.time(k);
        row[0] = c0 * ds(t);
        row[1] = c1 * s(t);
    })
    .unwrap();
    assert!(weighted_norm(&f.sub(&expected).unwrap()) <= 1e-6 * weighted_norm(&expected));
}

#[test]
fn defects_of_a_decaying_datum_are_tail_sums() {
    let g = TimeGrid::new(8.0, 64, 2.5).unwrap();
    let op = operator(Instance::Mixed1d, 128);
    let problem = heat_problem(op.clone(), g);
    let full = SchemeSymbol::full(&problem).unwrap();
    let w: Vec<C64> = (0..128).map(|i| C64::from(1.0 / (1.0 + op.mu(i).powi(2)))).collect();
    let z = C64::new(2.5, 7.0);
    let mut previous = f64::INFINITY;
    for n in [1, 2, 4, 8, 16, 32, 63] {
        let part = SchemeSymbol::new(&problem, GalerkinScheme::build(op.clone(), n, 0).unwrap()).unwrap();
        let d = strong_convergence_defect(&full, &part, z, &w).unwrap();
        let tail: f64 = (2 * n..128)
            .map(|i| (1.0 + op.mu(i).powi(2)) * w[i].norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(d.consistency <= 1e-12);
        assert!((d.projection_graph - tail).abs() <= 1e-10 * tail.max(1e-300));
        assert!(d.g() <= previous);
        previous = d.g();
    }
}

#[test]
fn sweep_is_exact_once_the_excitation_is_covered() {
    let g = TimeGrid::new(8.0, 256, 2.5).unwrap();
    let op = operator(Instance::Mixed1d, 64);
    let problem = heat_problem(op.clone(), g);
    let full = SchemeSymbol::full(&problem).unwrap();
    let exc = Excitation {
        n_pairs: 4,
        n_kernel: 0,
        decay: 1.0,
        profile: TimeProfile::Sin8 { start: 0.5, end: 3.0 },
    };
    let u = manufactured_solution(&g, &op, &exc).unwrap();
    let f = manufactured_forcing(&problem, &full, &u).unwrap();
    let opts = SweepOptions {
        excited_pairs: Some(4),
        ..SweepOptions::default()
    };
    let table = convergence_sweep(&problem, &full, &f, &[2, 4, 8], &opts).unwrap();
    assert!(table.pass(), "{:?}", table.failing_checks());
    let norm_u = weighted_norm(&u);
    assert!(table.rows[0].err_h > 1e-3 * norm_u);
    assert!(table.rows[2].err_h <= 1e-8 * norm_u);
}

#[test]
fn degenerate_oracle_is_exact() {
    let inst = OracleInstance::generate(1, 0.3, 2.0, 5).unwrap();
    let report = oracle_resolvent_convergence(&inst, &CVec::from_element(1, C64::new(0.7, -0.2))).unwrap();
    assert_eq!(report.table.rows.len(), 1);
    assert!(report.table.rows[0].err_graph <= 1e-14);
    assert!(report.pass());
}
