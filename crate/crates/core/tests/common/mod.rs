//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::sync::Arc;

use evoeq::convergence::TimeProfile;
use evoeq::linalg::{CMat, CVec, C64};
use evoeq::material::{heat_law, ProjectedLaw};
use evoeq::solver::EvolutionaryProblem;
use evoeq::spaces::{TimeGrid, WeightedSignal};
use evoeq::spatial::{GalerkinScheme, Instance, SpatialOperator};

pub fn operator(instance: Instance, resolution: usize) -> Arc<SpatialOperator> {
    Arc::new(instance.build(resolution).unwrap())
}

pub fn heat_for(op: &SpatialOperator) -> evoeq::material::MaterialLaw {
    let nc = op.n_components();
    heat_law(1, nc - 1).unwrap()
}

pub fn heat_problem(op: Arc<SpatialOperator>, grid: TimeGrid) -> EvolutionaryProblem {
    let law = heat_for(&op);
    EvolutionaryProblem::new(law, op, grid).unwrap()
}

/// `f(t_k) = profile(t_k) · coeffs`, sampled directly in time, so it vanishes
/// exactly outside the profile support.
pub fn sampled_forcing(grid: &TimeGrid, coeffs: &[C64], profile: TimeProfile) -> WeightedSignal {
    WeightedSignal::from_fn(*grid, coeffs.len(), |k, row| {
        let s = profile.eval(grid.time(k));
        for (r, c) in row.iter_mut().zip(coeffs) {
            *r = c * s;
        }
    })
    .unwrap()
}

/// `(1 + μ_j²)^{-1}` with a mode-dependent phase on every scheme mode.
pub fn decaying_coeffs(scheme: &GalerkinScheme) -> Vec<C64> {
    (0..scheme.n_total())
        .map(|i| C64::from_polar(1.0 / (1.0 + scheme.mu(i).powi(2)), 0.37 * i as f64))
        .collect()
}

/// Relative unweighted L₂ difference over samples with `t ≤ t_max`.
pub fn relative_l2(a: &WeightedSignal, b: &WeightedSignal, t_max: f64) -> f64 {
    let g = a.grid();
    let (mut d, mut n) = (0.0, 0.0);
    for (k, (x, y)) in a.rows().zip(b.rows()).enumerate() {
        if g.time(k) > t_max {
            break;
        }
        d += x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>();
        n += x.iter().map(|p| p.norm_sqr()).sum::<f64>();
    }
    (d / n).sqrt()
}

/// Implicit Euler for `G0 u' + (G1 + A) u = f`, `u(0) = 0`, returning the
/// state at every multiple of `sample_dt` up to `t_end` (exclusive).
/// `G0` may be singular (the heat system is differential-algebraic).
pub fn implicit_euler(
    g0: &CMat,
    g1: &CMat,
    a: &CMat,
    f: impl Fn(f64) -> CVec,
    steps_per_sample: usize,
    sample_dt: f64,
    samples: usize,
) -> Vec<CVec> {
    let n = g0.nrows();
    let dt = sample_dt / steps_per_sample as f64;
    let lhs = g0 / C64::from(dt) + g1 + a;
    let lu = lhs.lu();
    let mut u = CVec::zeros(n);
    let mut out = Vec::with_capacity(samples);
    out.push(u.clone());
    for k in 1..samples {
        for s in 1..=steps_per_sample {
            let t = ((k - 1) * steps_per_sample + s) as f64 * dt;
            let rhs = f(t) + g0 * &u / C64::from(dt);
            u = lu.solve(&rhs).expect("implicit Euler matrix is invertible");
        }
        out.push(u.clone());
    }
    out
}

/// `(G0, G1)` of the heat law compressed onto `scheme`.
pub fn heat_parts(scheme: &GalerkinScheme) -> (CMat, CMat) {
    let pl = ProjectedLaw::new(&heat_for(scheme.operator()), scheme).unwrap();
    let (a, b) = pl.rational_parts().unwrap();
    (a.clone(), b.clone())
}
