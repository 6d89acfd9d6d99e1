//! Quadrature oracles gating the operator catalog.
//!
//! Everything here works from point values of the mode fields and
//! Gauss–Legendre quadrature, independently of the closed-form inner
//! products used by the projections.

use serde::Serialize;

use super::catalog::{Instance, SpatialOperator};
use super::field::Field;
use crate::linalg::{C64, I};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite tensor Gauss rule on the unit interval or square.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub const ORDER: usize = 64;

    pub fn unit_cube(dim: usize, cells: usize) -> Self {
        let (x, w) = gauss_legendre(Self::ORDER);
        let h = 1.0 / cells as f64;
        let line: Vec<(f64, f64)> = (0..cells)
            .flat_map(|c| {
                let a = c as f64 * h;
                x.iter()
                    .zip(&w)
                    .map(move |(&xi, &wi)| (a + 0.5 * h * (xi + 1.0), 0.5 * h * wi))
            })
            .collect();
        let mut points = vec![vec![]];
        let mut weights = vec![1.0];
        for _ in 0..dim {
            let mut np = Vec::with_capacity(points.len() * line.len());
            let mut nw = Vec::with_capacity(points.len() * line.len());
            for (p, w) in points.iter().zip(&weights) {
                for &(xi, wi) in &line {
                    let mut q = p.clone();
                    q.push(xi);
                    np.push(q);
                    nw.push(w * wi);
                }
            }
            points = np;
            weights = nw;
        }
        Self { points, weights }
    }

    /// Enough cells to resolve oscillations up to angular frequency `max_freq`.
    pub fn for_frequency(dim: usize, max_freq: f64) -> Self {
        Self::unit_cube(dim, 1 + (max_freq / 60.0) as usize)
    }

    pub fn integrate(&self, values: impl Iterator<Item = C64>) -> C64 {
        values.zip(&self.weights).map(|(v, w)| v * *w).sum()
    }
}

/// `A` applied pointwise to a field through its analytic derivatives.
pub fn apply_operator(instance: Instance, field: &Field, x: &[f64]) -> Vec<C64> {
    match instance {
        Instance::Mixed1d | Instance::Periodic1d => {
            vec![field.eval_partial(1, 0, x), field.eval_partial(0, 0, x)]
        }
        Instance::DirichletSquare2d => vec![
            field.eval_partial(1, 0, x) + field.eval_partial(2, 1, x),
            field.eval_partial(0, 0, x),
            field.eval_partial(0, 1, x),
        ],
    }
}

fn boundary_defect(instance: Instance, field: &Field) -> f64 {
    let ev = |x: &[f64]| field.eval(x);
    match instance {
        Instance::Mixed1d => ev(&[0.0])[0].norm().max(ev(&[1.0])[1].norm()),
        Instance::Periodic1d => {
            let (a, b) = (ev(&[0.0]), ev(&[1.0]));
            (a[0] - b[0]).norm().max((a[1] - b[1]).norm())
        }
        Instance::DirichletSquare2d => (0..=32)
            .map(|i| i as f64 / 32.0)
            .flat_map(|s| [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]])
            .map(|x| ev(&x)[0].norm())
            .fold(0.0, f64::max),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, max_defect: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_defect,
            tolerance,
            pass: max_defect <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogReport {
    pub operator: String,
    pub modes_checked: usize,
    pub checks: Vec<CheckResult>,
}

impl CatalogReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks the first `max_modes` modes of `op`: unit norm, orthonormality,
/// agreement of the closed-form component Grams with quadrature, the eigen
/// relation `Aφ = iμφ`, `Aφ = 0` on the kernel, the boundary conditions,
/// and skew-symmetry `⟨φ_i, Aφ_j⟩ = −conj⟨φ_j, Aφ_i⟩`.
pub fn verify_catalog(op: &SpatialOperator, max_modes: usize) -> CatalogReport {
    let instance = op.instance();
    let modes = &op.modes()[..max_modes.min(op.resolution())];
    let max_freq = modes.iter().map(|m| m.mu.abs()).fold(0.0, f64::max).max(1.0);
    let quad = Quadrature::for_frequency(instance.spatial_dim(), 2.0 * max_freq);
    let nc = op.n_components();

    let values: Vec<Vec<Vec<C64>>> = modes
        .iter()
        .map(|m| quad.points.iter().map(|x| m.field.eval(x)).collect())
        .collect();
    let applied: Vec<Vec<Vec<C64>>> = modes
        .iter()
        .map(|m| {
            quad.points
                .iter()
                .map(|x| apply_operator(instance, &m.field, x))
                .collect()
        })
        .collect();

    let inner = |a: &[Vec<C64>], b: &[Vec<C64>], comp: Option<(usize, usize)>| -> C64 {
        quad.integrate(a.iter().zip(b).map(|(va, vb)| match comp {
            Some((p, q)) => va[p].conj() * vb[q],
            None => va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum(),
        }))
    };

    let mut norm_defect: f64 = 0.0;
    let mut ortho_defect: f64 = 0.0;
    let mut gram_defect: f64 = 0.0;
    let mut skew_defect: f64 = 0.0;
    for i in 0..modes.len() {
        for j in 0..modes.len() {
            let g = inner(&values[i], &values[j], None);
            let target = if i == j { 1.0 } else { 0.0 };
            ortho_defect = ortho_defect.max((g - target).norm());
            if i == j {
                norm_defect = norm_defect.max((g.re - 1.0).abs());
            }
            for p in 0..nc {
                for q in 0..nc {
                    let closed = modes[i].field.component_inner(p, &modes[j].field, q);
                    let numeric = inner(&values[i], &values[j], Some((p, q)));
                    gram_defect = gram_defect.max((closed - numeric).norm());
                }
            }
            let aij = inner(&values[i], &applied[j], None);
            let aji = inner(&values[j], &applied[i], None);
            let scale = 1.0 + modes[i].mu.abs().max(modes[j].mu.abs());
            skew_defect = skew_defect.max((aij + aji.conj()).norm() / scale);
        }
    }

    let mut eigen_defect: f64 = 0.0;
    let mut kernel_defect: f64 = 0.0;
    let mut bc_defect: f64 = 0.0;
    for (k, m) in modes.iter().enumerate() {
        let resid = quad
            .integrate(values[k].iter().zip(&applied[k]).map(|(v, a)| {
                let r: f64 = a.iter().zip(v).map(|(ai, vi)| (ai - I * m.mu * vi).norm_sqr()).sum();
                C64::new(r, 0.0)
            }))
            .re
            .sqrt();
        if m.is_kernel() {
            kernel_defect = kernel_defect.max(resid);
        } else {
            eigen_defect = eigen_defect.max(resid / m.mu.abs().max(1.0));
        }
        bc_defect = bc_defect.max(boundary_defect(instance, &m.field));
    }

    let mut checks = vec![
        CheckResult::new("unit_norm", norm_defect, 1e-10),
        CheckResult::new("orthonormality", ortho_defect, 1e-8),
        CheckResult::new("closed_form_gram", gram_defect, 1e-10),
        CheckResult::new("eigen_relation", eigen_defect, 1e-8),
        CheckResult::new("boundary_conditions", bc_defect, 1e-12),
        CheckResult::new("skew_symmetry", skew_defect, 1e-8),
    ];
    if modes.iter().any(|m| m.is_kernel()) {
        checks.push(CheckResult::new("kernel", kernel_defect, 1e-10));
    }
    CatalogReport {
        operator: op.name().to_string(),
        modes_checked: modes.len(),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(64);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-13);
        let m126: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(126)).sum();
        assert!((m126 - 2.0 / 127.0).abs() < 1e-13);
        let (x3, w3) = gauss_legendre(3);
        assert!((x3[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn catalog_mixed_passes() {
        let op = SpatialOperator::mixed_bc_1d_with(64).unwrap();
        let report = verify_catalog(&op, 40);
        assert!(report.pass(), "{report:#?}");
    }

    #[test]
    fn catalog_periodic_passes() {
        let op = SpatialOperator::periodic_1d_with(64).unwrap();
        let report = verify_catalog(&op, 30);
        assert!(report.pass(), "{report:#?}");
        assert!(report.checks.iter().any(|c| c.name == "kernel"));
    }

    #[test]
    fn catalog_square_passes() {
        let op = SpatialOperator::dirichlet_square_2d_with(60).unwrap();
        let report = verify_catalog(&op, 40);
        assert!(report.pass(), "{report:#?}");
    }

    #[test]
    fn eigenfield_of_periodic_wave() {
        // (e^{i2πx}, e^{i2πx})/√2 is the + partner of the first pair
        let op = SpatialOperator::periodic_1d_with(8).unwrap();
        let m = op.mode(op.pair_index(0));
        let quad = Quadrature::unit_cube(1, 1);
        let err: f64 = quad
            .points
            .iter()
            .zip(&quad.weights)
            .map(|(x, w)| {
                let expect = C64::from_polar(1.0 / 2f64.sqrt(), 2.0 * std::f64::consts::PI * x[0]);
                let v = m.field.eval(x);
                let a = apply_operator(Instance::Periodic1d, &m.field, x);
                w * ((v[0] - expect).norm_sqr()
                    + (v[1] - expect).norm_sqr()
                    + (a[0] - I * 2.0 * std::f64::consts::PI * expect).norm_sqr())
            })
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8);
    }

    #[test]
    fn square_kernel_is_divergence_free_pointwise() {
        let op = SpatialOperator::dirichlet_square_2d_with(30).unwrap();
        let quad = Quadrature::unit_cube(2, 1);
        let curl = op.mode(0);
        assert!(curl.is_kernel());
        for x in quad.points.iter().step_by(37) {
            let a = apply_operator(Instance::DirichletSquare2d, &curl.field, x);
            assert!(a[0].norm() < 1e-10);
        }
    }
}
