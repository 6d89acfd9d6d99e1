use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::catalog::SpatialOperator;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64, I};

pub const ORDERING_VERSION: &str = "kernel-first/abs-mu-asc/plus-first/v1";

/// A finite mode selection `H_n` with its projection `P_n` (coefficient
/// truncation) and embedding `J_n` (zero padding).
#[derive(Clone, Debug)]
pub struct GalerkinScheme {
    op: Arc<SpatialOperator>,
    selected: Vec<usize>,
    n_pairs: usize,
    n_kernel: usize,
    pair_complete: bool,
}

/// JSON descriptor of a scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeDescriptor {
    pub operator: String,
    pub n_pairs: usize,
    pub n_kernel: usize,
    pub n_total: usize,
    pub pair_complete: bool,
    pub resolution: usize,
    pub ordering: String,
}

impl GalerkinScheme {
    /// The `n_pairs` lowest-`|μ|` pairs (both partners) plus the first
    /// `n_kernel` kernel modes, kernel first.
    pub fn build(op: Arc<SpatialOperator>, n_pairs: usize, n_kernel: usize) -> Result<Self> {
        if n_pairs == 0 && n_kernel == 0 {
            return Err(Error::InvalidScheme("empty scheme".into()));
        }
        if n_kernel > 0 && op.kernel_count() == 0 {
            return Err(Error::InvalidScheme(format!("{} has a trivial kernel", op.name())));
        }
        if n_kernel > op.kernel_count() {
            return Err(Error::InsufficientResolution {
                needed: n_kernel,
                found: op.kernel_count(),
            });
        }
        if n_pairs > op.pair_count() {
            return Err(Error::InsufficientResolution {
                needed: n_pairs,
                found: op.pair_count(),
            });
        }
        let mut selected: Vec<usize> = (0..n_kernel).collect();
        for p in 0..n_pairs {
            let i = op.pair_index(p);
            selected.extend([i, i + 1]);
        }
        Ok(Self {
            op,
            selected,
            n_pairs,
            n_kernel,
            pair_complete: true,
        })
    }

    /// Literal single-index truncation: the first `n_modes` nonkernel modes
    /// in enumeration order, which may split the last pair.
    pub fn leading(op: Arc<SpatialOperator>, n_modes: usize, n_kernel: usize) -> Result<Self> {
        if n_modes == 0 && n_kernel == 0 {
            return Err(Error::InvalidScheme("empty scheme".into()));
        }
        if n_kernel > 0 && op.kernel_count() == 0 {
            return Err(Error::InvalidScheme(format!("{} has a trivial kernel", op.name())));
        }
        if n_kernel > op.kernel_count() || n_modes > 2 * op.pair_count() {
            return Err(Error::InsufficientResolution {
                needed: n_kernel + n_modes,
                found: op.resolution(),
            });
        }
        let mut selected: Vec<usize> = (0..n_kernel).collect();
        selected.extend(op.kernel_count()..op.kernel_count() + n_modes);
        Ok(Self {
            op,
            selected,
            n_pairs: n_modes / 2,
            n_kernel,
            pair_complete: n_modes.is_multiple_of(2),
        })
    }

    /// Every enumerated mode.
    pub fn full(op: Arc<SpatialOperator>) -> Self {
        let (p, k) = (op.pair_count(), op.kernel_count());
        Self::build(op, p, k).expect("operator has at least one mode")
    }

    pub fn operator(&self) -> &SpatialOperator {
        &self.op
    }
    pub fn operator_arc(&self) -> &Arc<SpatialOperator> {
        &self.op
    }
    /// Full-basis indices of the selected modes in scheme order.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }
    pub fn n_total(&self) -> usize {
        self.selected.len()
    }
    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }
    pub fn n_kernel(&self) -> usize {
        self.n_kernel
    }
    pub fn pair_complete(&self) -> bool {
        self.pair_complete
    }
    pub fn mu(&self, local: usize) -> f64 {
        self.op.mu(self.selected[local])
    }
    pub fn mus(&self) -> Vec<f64> {
        self.selected.iter().map(|&i| self.op.mu(i)).collect()
    }

    /// Whether every mode of `self` is also in `other`.
    pub fn is_nested_in(&self, other: &GalerkinScheme) -> bool {
        Arc::ptr_eq(&self.op, &other.op) && self.selected.iter().all(|i| other.selected.contains(i))
    }

    pub fn descriptor(&self) -> SchemeDescriptor {
        SchemeDescriptor {
            operator: self.op.name().to_string(),
            n_pairs: self.n_pairs,
            n_kernel: self.n_kernel,
            n_total: self.n_total(),
            pair_complete: self.pair_complete,
            resolution: self.op.resolution(),
            ordering: ORDERING_VERSION.to_string(),
        }
    }

    /// `A_n = π_n A ι_n`: diagonal `iμ_j`, zero on kernel modes.
    pub fn project_a(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.n_total(),
            self.selected.iter().map(|&i| I * self.op.mu(i)),
        ))
    }

    /// `P_n v`: truncation of full-basis coefficients to the selected modes.
    pub fn apply_p(&self, v: &[C64]) -> Result<CVec> {
        let needed = self.selected.iter().max().map_or(0, |m| m + 1);
        if v.len() < needed {
            return Err(Error::InsufficientResolution { needed, found: v.len() });
        }
        Ok(CVec::from_iterator(self.n_total(), self.selected.iter().map(|&i| v[i])))
    }

    /// `J_n u_n`: zero padding into the full enumeration.
    pub fn embed_j(&self, u: &[C64]) -> Result<Vec<C64>> {
        if u.len() != self.n_total() {
            return Err(Error::DimensionMismatch {
                expected: self.n_total(),
                found: u.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.op.resolution()];
        for (&i, &c) in self.selected.iter().zip(u) {
            out[i] = c;
        }
        Ok(out)
    }

    /// Graph norm on `H_n`, `(Σ (1 + μ_j²)|u_j|²)^{1/2}`.
    pub fn graph_norm(&self, u: &[C64]) -> f64 {
        u.iter()
            .zip(&self.selected)
            .map(|(c, &i)| (1.0 + self.op.mu(i).powi(2)) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Component Gram matrix `G_pq[i][j] = ⟨φ_i^p, φ_j^q⟩` over the scheme.
    pub fn component_gram(&self, p: usize, q: usize) -> CMat {
        let n = self.n_total();
        let modes = self.op.modes();
        CMat::from_fn(n, n, |i, j| {
            let (a, b) = (&modes[self.selected[i]], &modes[self.selected[j]]);
            a.field.component_inner(p, &b.field, q)
        })
    }
}

/// See [`GalerkinScheme::build`].
pub fn build_scheme(op: Arc<SpatialOperator>, n_pairs: usize, n_kernel: usize) -> Result<GalerkinScheme> {
    GalerkinScheme::build(op, n_pairs, n_kernel)
}

pub fn project_a(scheme: &GalerkinScheme) -> CMat {
    scheme.project_a()
}

pub fn apply_p(scheme: &GalerkinScheme, v: &[C64]) -> Result<CVec> {
    scheme.apply_p(v)
}

pub fn embed_j(scheme: &GalerkinScheme, u: &[C64]) -> Result<Vec<C64>> {
    scheme.embed_j(u)
}

pub fn graph_norm(op: &SpatialOperator, v: &[C64]) -> f64 {
    op.graph_norm(v)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::linalg::norm_sq;

    fn mixed(res: usize) -> Arc<SpatialOperator> {
        Arc::new(SpatialOperator::mixed_bc_1d_with(res).unwrap())
    }

    #[test]
    fn one_mixed_pair() {
        let s = build_scheme(mixed(16), 1, 0).unwrap();
        assert_eq!(s.n_total(), 2);
        assert!(s.pair_complete());
        let a = s.project_a();
        assert!((a[(0, 0)] - I * (PI / 2.0)).norm() < 1e-15);
        assert!((a[(1, 1)] + I * (PI / 2.0)).norm() < 1e-15);
        assert_eq!(a[(0, 1)], C64::new(0.0, 0.0));
        assert_eq!(a.adjoint(), -a.clone());
    }

    #[test]
    fn kernel_only_periodic_scheme() {
        let op = Arc::new(SpatialOperator::periodic_1d_with(16).unwrap());
        let s = build_scheme(op, 0, 2).unwrap();
        assert_eq!(s.n_total(), 2);
        assert!(s.project_a().iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        assert!(matches!(build_scheme(mixed(16), 0, 0), Err(Error::InvalidScheme(_))));
        assert!(matches!(build_scheme(mixed(16), 1, 1), Err(Error::InvalidScheme(_))));
        assert!(matches!(
            build_scheme(mixed(16), 9, 0),
            Err(Error::InsufficientResolution { .. })
        ));
    }

    #[test]
    fn leading_truncation_can_split_pairs() {
        let s = GalerkinScheme::leading(mixed(16), 3, 0).unwrap();
        assert!(!s.pair_complete());
        assert_eq!(s.selected(), &[0, 1, 2]);
    }

    #[test]
    fn projection_and_embedding() {
        let op = mixed(16);
        let s = build_scheme(op.clone(), 2, 0).unwrap();
        let v: Vec<C64> = (0..16).map(|i| C64::new(i as f64, 1.0)).collect();
        let p = s.apply_p(&v).unwrap();
        assert_eq!(p.as_slice(), &v[..4]);
        assert!(norm_sq(p.as_slice()) <= norm_sq(&v));
        let back = s.embed_j(p.as_slice()).unwrap();
        assert_eq!(&back[..4], &v[..4]);
        assert!(back[4..].iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert_eq!(s.apply_p(&back).unwrap(), p);
        assert!(matches!(
            s.apply_p(&v[..3]),
            Err(Error::InsufficientResolution { needed: 4, found: 3 })
        ));
    }

    #[test]
    fn orthogonal_vector_projects_to_zero() {
        let s = build_scheme(mixed(16), 2, 0).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 16];
        v[7] = C64::new(1.0, -2.0);
        assert!(s.apply_p(&v).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn descriptor_serialises() {
        let s = build_scheme(mixed(16), 2, 0).unwrap();
        let json = serde_json::to_value(s.descriptor()).unwrap();
        assert_eq!(json["operator"], "mixed_1d");
        assert_eq!(json["n_pairs"], 2);
        assert_eq!(json["resolution"], 16);
        assert_eq!(json["ordering"], ORDERING_VERSION);
    }
}
