//! Material laws `z ↦ M(z)` on the coefficient space, their coercivity
//! certificates and Galerkin compressions `M_n = π_n M ι_n`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, lambda_min_hermitian, op_norm, CMat, CVec, C64};
use crate::spaces::TimeGrid;
use crate::spatial::GalerkinScheme;

type Callable = Arc<dyn Fn(C64) -> CMat + Send + Sync>;

#[derive(Clone)]
enum LawKind {
    /// `M(z) = M0 + z^{-1} M1`
    RationalBlock { m0: CMat, m1: CMat },
    Generic {
        eval: Callable,
        pattern: Vec<(usize, usize)>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    RationalBlock,
    GenericCallable,
}

/// Holomorphic operator-valued function on `Re z > nu0`, acting pointwise on
/// the `dim` coefficient components of a field.
#[derive(Clone)]
pub struct MaterialLaw {
    name: String,
    dim: usize,
    nu0: f64,
    kind: LawKind,
}

impl fmt::Debug for MaterialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialLaw")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("nu0", &self.nu0)
            .field("kind", &self.bound_kind())
            .finish()
    }
}

impl MaterialLaw {
    /// `M(z) = M0 + z^{-1} M1`; `nu0 = 0` covers the pole at the origin.
    pub fn rational(name: impl Into<String>, m0: CMat, m1: CMat) -> Result<Self> {
        let dim = m0.nrows();
        if dim == 0 || !m0.is_square() || m1.shape() != m0.shape() {
            return Err(Error::InvalidLaw(
                "coefficients must be square and of equal shape".into(),
            ));
        }
        if m0.iter().chain(m1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidLaw("non-finite coefficient".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            nu0: 0.0,
            kind: LawKind::RationalBlock { m0, m1 },
        })
    }

    /// A law given by an arbitrary callable. The abscissa bound `nu0` must be
    /// declared; `pattern` lists the component couplings `(p, q)` the law may
    /// populate (all of them when `None`).
    pub fn generic(
        name: impl Into<String>,
        dim: usize,
        nu0: f64,
        pattern: Option<Vec<(usize, usize)>>,
        eval: impl Fn(C64) -> CMat + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 || !nu0.is_finite() {
            return Err(Error::InvalidLaw("dimension must be positive and nu0 finite".into()));
        }
        let pattern = pattern.unwrap_or_else(|| (0..dim).flat_map(|p| (0..dim).map(move |q| (p, q))).collect());
        if pattern.iter().any(|&(p, q)| p >= dim || q >= dim) {
            return Err(Error::InvalidLaw("pattern entry out of range".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            nu0,
            kind: LawKind::Generic {
                eval: Arc::new(eval),
                pattern,
            },
        })
    }

    /// `M ≡ I`.
    pub fn identity(dim: usize) -> Self {
        Self::rational("identity", CMat::identity(dim, dim), CMat::zeros(dim, dim)).expect("valid")
    }

    /// `M ≡ 0`.
    pub fn zero(dim: usize) -> Self {
        Self::rational("zero", CMat::zeros(dim, dim), CMat::zeros(dim, dim)).expect("valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nu0(&self) -> f64 {
        self.nu0
    }
    pub fn bound_kind(&self) -> BoundKind {
        match self.kind {
            LawKind::RationalBlock { .. } => BoundKind::RationalBlock,
            LawKind::Generic { .. } => BoundKind::GenericCallable,
        }
    }

    /// `(M0, M1)` of a rational-block law.
    pub fn rational_parts(&self) -> Option<(&CMat, &CMat)> {
        match &self.kind {
            LawKind::RationalBlock { m0, m1 } => Some((m0, m1)),
            LawKind::Generic { .. } => None,
        }
    }

    pub fn eval(&self, z: C64) -> CMat {
        match &self.kind {
            LawKind::RationalBlock { m0, m1 } => m0 + m1 / z,
            LawKind::Generic { eval, .. } => eval(z),
        }
    }

    /// `z M(z)`, evaluated as `z M0 + M1` for rational-block laws.
    pub fn z_m(&self, z: C64) -> CMat {
        match &self.kind {
            LawKind::RationalBlock { m0, m1 } => m0 * z + m1,
            LawKind::Generic { eval, .. } => eval(z) * z,
        }
    }

    /// Component couplings `(p, q)` that may be nonzero.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        match &self.kind {
            LawKind::RationalBlock { m0, m1 } => (0..self.dim)
                .flat_map(|p| (0..self.dim).map(move |q| (p, q)))
                .filter(|&(p, q)| m0[(p, q)].norm() > 0.0 || m1[(p, q)].norm() > 0.0)
                .collect(),
            LawKind::Generic { pattern, .. } => pattern.clone(),
        }
    }

    /// Exact `inf_{Re z ≥ ν} λ_min(Herm(zM(z)))` for rational-block laws with
    /// Hermitian positive semidefinite `M0`, where `Herm(zM0 + M1) = Re z·M0 + Herm(M1)`.
    pub fn analytic_coercivity(&self, nu: f64) -> Option<f64> {
        let (m0, m1) = self.rational_parts()?;
        let scale = m0.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if (m0 - m0.adjoint()).iter().any(|v| v.norm() > 1e-14 * scale.max(1.0)) {
            return None;
        }
        if lambda_min_hermitian(m0) < -1e-14 * scale.max(1.0) {
            return None;
        }
        Some(lambda_min_hermitian(&(m0 * C64::new(nu, 0.0) + hermitian_part(m1))))
    }
}

/// `M(z) = P_θ + z^{-1} P_q` on `m_theta + m_q` components.
pub fn heat_law(m_theta: usize, m_q: usize) -> Result<MaterialLaw> {
    if m_theta == 0 || m_q == 0 {
        return Err(Error::InvalidLaw(
            "heat law needs at least one component of each kind".into(),
        ));
    }
    let dim = m_theta + m_q;
    let m0 = CMat::from_diagonal(&CVec::from_fn(dim, |i, _| {
        C64::new(if i < m_theta { 1.0 } else { 0.0 }, 0.0)
    }));
    let m1 = CMat::identity(dim, dim) - &m0;
    MaterialLaw::rational("heat", m0, m1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoercivityStatus {
    Coercive,
    NotCoercive,
}

/// Sampled certificate for `Re⟨h, zM(z)h⟩ ≥ c‖h‖²` and `‖zM(z)‖ ≤ d`.
#[derive(Clone, Debug)]
pub struct CoercivityReport {
    pub c_estimate: f64,
    pub nu: f64,
    pub z_samples: Vec<C64>,
    pub d_max: f64,
    /// Closed-form value over the whole half-plane, when available.
    pub analytic_c: Option<f64>,
    pub status: CoercivityStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivitySummary {
    pub c_estimate: f64,
    pub d_max: f64,
    pub nu: f64,
    pub num_samples: usize,
    pub status: CoercivityStatus,
}

impl CoercivityReport {
    pub fn is_coercive(&self) -> bool {
        self.status == CoercivityStatus::Coercive
    }

    pub fn summary(&self) -> CoercivitySummary {
        CoercivitySummary {
            c_estimate: self.c_estimate,
            d_max: self.d_max,
            nu: self.nu,
            num_samples: self.z_samples.len(),
            status: self.status,
        }
    }
}

/// Samples on `Re z = ν`: the grid frequencies (when given) plus a coarse
/// symmetric sweep of `Im z` over `0, ±10^{-2..4}`.
pub fn line_samples(nu: f64, grid: Option<&TimeGrid>) -> Vec<C64> {
    let mut out: Vec<C64> = vec![C64::new(nu, 0.0)];
    for e in -2..=4 {
        for m in [1.0, 3.0] {
            let xi = m * 10f64.powi(e);
            out.push(C64::new(nu, xi));
            out.push(C64::new(nu, -xi));
        }
    }
    if let Some(g) = grid {
        out.extend((0..g.len()).map(|j| C64::new(nu, g.xi(j))));
    }
    out
}

/// `c = min_z λ_min(Herm(zM(z)))` and `d = max_z ‖zM(z)‖` over `samples`.
pub fn coercivity_lower_bound(law: &MaterialLaw, nu: f64, samples: &[C64]) -> Result<CoercivityReport> {
    if nu <= law.nu0() {
        return Err(Error::InvalidLaw(format!("nu = {nu} must exceed nu0 = {}", law.nu0())));
    }
    if samples.is_empty() {
        return Err(Error::InvalidLaw("no frequency samples".into()));
    }
    if let Some(z) = samples.iter().find(|z| z.re < nu) {
        return Err(Error::InvalidLaw(format!("sample {z} lies left of Re z = {nu}")));
    }
    let mut c = f64::INFINITY;
    let mut d: f64 = 0.0;
    for &z in samples {
        let zm = law.z_m(z);
        c = c.min(lambda_min_hermitian(&zm));
        d = d.max(op_norm(&zm));
    }
    let analytic_c = law.analytic_coercivity(nu);
    let status = if c > 0.0 && analytic_c.is_none_or(|a| a > 0.0) {
        CoercivityStatus::Coercive
    } else {
        CoercivityStatus::NotCoercive
    };
    Ok(CoercivityReport {
        c_estimate: c.max(0.0),
        nu,
        z_samples: samples.to_vec(),
        d_max: d,
        analytic_c,
        status,
    })
}

/// Compression `M_n(z) = π_n M(z) ι_n` of a law onto a Galerkin scheme,
/// with the component Gram matrices cached.
#[derive(Clone)]
pub struct ProjectedLaw {
    law: MaterialLaw,
    n: usize,
    /// `(p, q, G_pq)` for every coupling in the law's pattern
    grams: Vec<(usize, usize, CMat)>,
    /// Compressed `(M0, M1)` for rational-block laws
    rational: Option<(CMat, CMat)>,
}

impl ProjectedLaw {
    pub fn new(law: &MaterialLaw, scheme: &GalerkinScheme) -> Result<Self> {
        let comps = scheme.operator().n_components();
        if law.dim() != comps {
            return Err(Error::DimensionMismatch {
                expected: comps,
                found: law.dim(),
            });
        }
        let grams: Vec<(usize, usize, CMat)> = law
            .pattern()
            .into_iter()
            .map(|(p, q)| (p, q, scheme.component_gram(p, q)))
            .collect();
        let n = scheme.n_total();
        let rational = law.rational_parts().map(|(m0, m1)| {
            let mut a = CMat::zeros(n, n);
            let mut b = CMat::zeros(n, n);
            for (p, q, g) in &grams {
                a += g * m0[(*p, *q)];
                b += g * m1[(*p, *q)];
            }
            (a, b)
        });
        Ok(Self {
            law: law.clone(),
            n,
            grams,
            rational,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `M_n(z)` with entries `⟨φ_i, M(z)φ_j⟩`.
    pub fn eval(&self, z: C64) -> CMat {
        match &self.rational {
            Some((a, b)) => a + b / z,
            None => self.lift_components(&self.law.eval(z)),
        }
    }

    /// `z M_n(z)`.
    pub fn z_m(&self, z: C64) -> CMat {
        match &self.rational {
            Some((a, b)) => a * z + b,
            None => self.lift_components(&self.law.eval(z)) * z,
        }
    }

    pub fn rational_parts(&self) -> Option<(&CMat, &CMat)> {
        self.rational.as_ref().map(|(a, b)| (a, b))
    }

    fn lift_components(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (p, q, g) in &self.grams {
            out += g * m[(*p, *q)];
        }
        out
    }

    /// The compression as a material law on `H_n`.
    pub fn to_law(&self) -> MaterialLaw {
        match &self.rational {
            Some((a, b)) => {
                let mut law = MaterialLaw::rational(format!("{}_n", self.law.name()), a.clone(), b.clone())
                    .expect("compressed coefficients are square");
                law.nu0 = self.law.nu0();
                law
            }
            None => {
                let me = self.clone();
                MaterialLaw::generic(
                    format!("{}_n", self.law.name()),
                    self.n,
                    self.law.nu0(),
                    None,
                    move |z| me.eval(z),
                )
                .expect("valid generic law")
            }
        }
    }
}

/// `⟨φ_i, M(z) φ_j⟩` over the scheme's modes.
pub fn project_law(law: &MaterialLaw, scheme: &GalerkinScheme, z: C64) -> Result<CMat> {
    if z.re <= law.nu0() {
        return Err(Error::InvalidLaw(format!(
            "Re z = {} must exceed nu0 = {}",
            z.re,
            law.nu0()
        )));
    }
    Ok(ProjectedLaw::new(law, scheme)?.eval(z))
}
