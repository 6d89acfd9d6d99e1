//! Skew-selfadjoint operators given by their orthonormal eigen/kernel systems.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::field::{Field, Term, Trig1d};
use crate::error::{Error, Result};
use crate::linalg::{C64, I};

/// Default truncation resolution of the modal representation (number of modes).
pub const DEFAULT_RESOLUTION: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instance {
    /// `[[0, ∂ (q(1)=0)], [∂ (θ(0)=0), 0]]` on `L₂(0,1)²`.
    Mixed1d,
    /// `[[0, ∂#], [∂#, 0]]` on `L₂(0,1)²` with periodic boundary conditions.
    Periodic1d,
    /// `[[0, div], [grad₀, 0]]` on `L₂((0,1)²)^{1+2}`.
    DirichletSquare2d,
}

impl Instance {
    pub fn name(self) -> &'static str {
        match self {
            Instance::Mixed1d => "mixed_1d",
            Instance::Periodic1d => "periodic_1d",
            Instance::DirichletSquare2d => "dirichlet_square_2d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Instance::Mixed1d, Instance::Periodic1d, Instance::DirichletSquare2d]
            .into_iter()
            .find(|i| i.name() == name)
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            Instance::DirichletSquare2d => 2,
            _ => 1,
        }
    }

    pub fn build(self, resolution: usize) -> Result<SpatialOperator> {
        match self {
            Instance::Mixed1d => SpatialOperator::mixed_bc_1d_with(resolution),
            Instance::Periodic1d => SpatialOperator::periodic_1d_with(resolution),
            Instance::DirichletSquare2d => SpatialOperator::dirichlet_square_2d_with(resolution),
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Analytic form of a mode; enough to rebuild its field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    /// `(sin(μx), ∓i cos(μx))`, `μ = (k + 1/2)π`; `plus` selects the upper sign.
    MixedSine { k: usize, plus: bool },
    /// `(e^{iκx}, ±e^{iκx})/√2`, `κ = 2πk`; `aligned` selects `+`.
    PeriodicWave { k: i64, aligned: bool },
    /// Constant unit field in one component.
    Constant { component: usize },
    /// `(s, ∓i∇s/μ)/√2` with `s = 2 sin(kπx) sin(lπy)`.
    DirichletGradient { k: usize, l: usize, plus: bool },
    /// `(0, ∇^⊥ s/μ)`, divergence free.
    DirichletCurl { k: usize, l: usize },
}

/// One member of the orthonormal system.
#[derive(Clone, Debug)]
pub struct Mode {
    /// Positive for eigenmodes with nonzero eigenvalue; `0, -1, -2, …` for kernel modes.
    pub id: i64,
    /// Eigenvalue is `iμ`; zero on the kernel.
    pub mu: f64,
    pub descriptor: Descriptor,
    /// Groups the `+μ/−μ` partners; `None` on the kernel.
    pub pair_id: Option<usize>,
    pub field: Field,
}

impl Mode {
    pub fn is_kernel(&self) -> bool {
        self.pair_id.is_none()
    }
}

/// A skew-selfadjoint operator represented by its modes, in the fixed order
/// kernel modes first, then pairs by ascending `|μ|` with the `+μ` partner first.
#[derive(Clone, Debug)]
pub struct SpatialOperator {
    instance: Instance,
    n_components: usize,
    theta_components: usize,
    kernel_count: usize,
    modes: Vec<Mode>,
}

fn sine(h: i64) -> Trig1d {
    Trig1d::sin(h)
}

fn cosine(h: i64) -> Trig1d {
    Trig1d::cos(h)
}

fn single(coeff: C64, factors: Vec<Trig1d>) -> Vec<Term> {
    vec![Term::new(coeff, factors)]
}

impl SpatialOperator {
    pub fn mixed_bc_1d() -> Self {
        Self::mixed_bc_1d_with(DEFAULT_RESOLUTION).expect("default resolution")
    }

    pub fn periodic_1d() -> Self {
        Self::periodic_1d_with(DEFAULT_RESOLUTION).expect("default resolution")
    }

    pub fn dirichlet_square_2d() -> Self {
        Self::dirichlet_square_2d_with(DEFAULT_RESOLUTION).expect("default resolution")
    }

    /// Mixed boundary conditions with `resolution / 2` pairs.
    pub fn mixed_bc_1d_with(resolution: usize) -> Result<Self> {
        let pairs = resolution / 2;
        if pairs == 0 {
            return Err(Error::InvalidScheme("resolution must hold at least one pair".into()));
        }
        let mut modes = Vec::with_capacity(2 * pairs);
        for k in 0..pairs {
            let h = 2 * k as i64 + 1;
            let mu = (k as f64 + 0.5) * PI;
            for plus in [true, false] {
                let q_coeff = if plus { -I } else { I };
                modes.push(Mode {
                    id: modes.len() as i64 + 1,
                    mu: if plus { mu } else { -mu },
                    descriptor: Descriptor::MixedSine { k, plus },
                    pair_id: Some(k),
                    field: Field {
                        components: vec![
                            single(C64::new(1.0, 0.0), vec![sine(h)]),
                            single(q_coeff, vec![cosine(h)]),
                        ],
                    },
                });
            }
        }
        Ok(Self {
            instance: Instance::Mixed1d,
            n_components: 2,
            theta_components: 1,
            kernel_count: 0,
            modes,
        })
    }

    /// Periodic boundary conditions: the two constant kernel modes plus
    /// `(resolution - 2) / 2` pairs.
    pub fn periodic_1d_with(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidScheme("resolution must hold the kernel".into()));
        }
        let pairs = (resolution - 2) / 2;
        let mut modes = Vec::with_capacity(2 + 2 * pairs);
        for component in 0..2 {
            modes.push(Mode {
                id: -(component as i64),
                mu: 0.0,
                descriptor: Descriptor::Constant { component },
                pair_id: None,
                field: Field {
                    components: (0..2)
                        .map(|c| {
                            if c == component {
                                single(C64::new(1.0, 0.0), vec![Trig1d::one()])
                            } else {
                                vec![]
                            }
                        })
                        .collect(),
                },
            });
        }
        let amp = C64::new(1.0 / SQRT_2, 0.0);
        let mut next_id = 1;
        for p in 0..pairs {
            // wavenumbers 2π, −2π, 4π, −4π, …
            let level = (p / 2 + 1) as i64;
            let k = if p % 2 == 0 { level } else { -level };
            let kappa = 2.0 * PI * k as f64;
            // the partner with eigenvalue +|κ| comes first
            let order = if k > 0 { [true, false] } else { [false, true] };
            for aligned in order {
                let sign = if aligned { 1.0 } else { -1.0 };
                modes.push(Mode {
                    id: next_id,
                    mu: sign * kappa,
                    descriptor: Descriptor::PeriodicWave { k, aligned },
                    pair_id: Some(p),
                    field: Field {
                        components: vec![
                            single(amp, vec![Trig1d::exp(4 * k)]),
                            single(amp * sign, vec![Trig1d::exp(4 * k)]),
                        ],
                    },
                });
                next_id += 1;
            }
        }
        Ok(Self {
            instance: Instance::Periodic1d,
            n_components: 2,
            theta_components: 1,
            kernel_count: 2,
            modes,
        })
    }

    /// Dirichlet square: `resolution / 3` gradient pairs and as many
    /// divergence-free kernel modes, both generated by the Dirichlet
    /// Laplacian eigenfunctions in the same `(k² + l², k, l)` order.
    pub fn dirichlet_square_2d_with(resolution: usize) -> Result<Self> {
        let count = resolution / 3;
        if count == 0 {
            return Err(Error::InvalidScheme("resolution must hold at least one pair".into()));
        }
        let levels = square_levels(count);
        let mut modes = Vec::with_capacity(3 * count);
        for (idx, &(k, l)) in levels.iter().enumerate() {
            let mu = PI * ((k * k + l * l) as f64).sqrt();
            let (hk, hl) = (2 * k as i64, 2 * l as i64);
            let (kp, lp) = (k as f64 * PI, l as f64 * PI);
            modes.push(Mode {
                id: -(idx as i64),
                mu: 0.0,
                descriptor: Descriptor::DirichletCurl { k, l },
                pair_id: None,
                field: Field {
                    components: vec![
                        vec![],
                        single(C64::new(-2.0 * lp / mu, 0.0), vec![sine(hk), cosine(hl)]),
                        single(C64::new(2.0 * kp / mu, 0.0), vec![cosine(hk), sine(hl)]),
                    ],
                },
            });
        }
        for (p, &(k, l)) in levels.iter().enumerate() {
            let mu = PI * ((k * k + l * l) as f64).sqrt();
            let (hk, hl) = (2 * k as i64, 2 * l as i64);
            let (kp, lp) = (k as f64 * PI, l as f64 * PI);
            for plus in [true, false] {
                let flux = if plus { -I } else { I } / (mu * SQRT_2);
                modes.push(Mode {
                    id: (2 * p + if plus { 1 } else { 2 }) as i64,
                    mu: if plus { mu } else { -mu },
                    descriptor: Descriptor::DirichletGradient { k, l, plus },
                    pair_id: Some(p),
                    field: Field {
                        components: vec![
                            single(C64::new(SQRT_2, 0.0), vec![sine(hk), sine(hl)]),
                            single(flux * (2.0 * kp), vec![cosine(hk), sine(hl)]),
                            single(flux * (2.0 * lp), vec![sine(hk), cosine(hl)]),
                        ],
                    },
                });
            }
        }
        Ok(Self {
            instance: Instance::DirichletSquare2d,
            n_components: 3,
            theta_components: 1,
            kernel_count: count,
            modes,
        })
    }

    pub fn instance(&self) -> Instance {
        self.instance
    }
    pub fn name(&self) -> &'static str {
        self.instance.name()
    }
    /// Number of coefficient components (`1 + d`).
    pub fn n_components(&self) -> usize {
        self.n_components
    }
    pub fn theta_components(&self) -> usize {
        self.theta_components
    }
    /// Total number of enumerated modes (the declared resolution).
    pub fn resolution(&self) -> usize {
        self.modes.len()
    }
    pub fn kernel_count(&self) -> usize {
        self.kernel_count
    }
    pub fn pair_count(&self) -> usize {
        (self.modes.len() - self.kernel_count) / 2
    }
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }
    pub fn mode(&self, index: usize) -> &Mode {
        &self.modes[index]
    }
    pub fn kernel_modes(&self) -> &[Mode] {
        &self.modes[..self.kernel_count]
    }
    /// Full-basis index of the `+` partner of pair `p`.
    pub fn pair_index(&self, p: usize) -> usize {
        self.kernel_count + 2 * p
    }
    pub fn mu(&self, index: usize) -> f64 {
        self.modes[index].mu
    }

    /// `(Σ_j (1 + μ_j²)|v_j|²)^{1/2}` over the full enumeration; entries past
    /// the end of `v` count as zero.
    pub fn graph_norm(&self, v: &[C64]) -> f64 {
        v.iter()
            .zip(&self.modes)
            .map(|(c, m)| (1.0 + m.mu * m.mu) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `A` applied to full-basis coefficients: multiplication by `iμ_j`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        v.iter().zip(&self.modes).map(|(c, m)| I * m.mu * c).collect()
    }
}

/// The first `count` index pairs `(k, l)`, `k, l ≥ 1`, by `(k² + l², k, l)`.
fn square_levels(count: usize) -> Vec<(usize, usize)> {
    let mut bound = 1;
    loop {
        let mut all: Vec<(usize, usize)> = (1..=bound).flat_map(|k| (1..=bound).map(move |l| (k, l))).collect();
        all.sort_by_key(|&(k, l)| (k * k + l * l, k, l));
        // every (k, l) with k² + l² ≤ bound² is present
        let complete = all.iter().take_while(|&&(k, l)| k * k + l * l <= bound * bound).count();
        if complete >= count {
            all.truncate(count);
            return all;
        }
        bound *= 2;
    }
}

/// Mixed boundary conditions at default resolution.
pub fn mixed_bc_1d() -> SpatialOperator {
    SpatialOperator::mixed_bc_1d()
}

/// Periodic boundary conditions at default resolution.
pub fn periodic_1d() -> SpatialOperator {
    SpatialOperator::periodic_1d()
}

/// Dirichlet unit square at default resolution.
pub fn dirichlet_square_2d() -> SpatialOperator {
    SpatialOperator::dirichlet_square_2d()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_spectrum_starts_at_half_pi() {
        let op = mixed_bc_1d();
        assert_eq!(op.kernel_count(), 0);
        assert_eq!(op.resolution(), 512);
        assert!((op.mu(0) - PI / 2.0).abs() < 1e-15);
        assert!((op.mu(1) + PI / 2.0).abs() < 1e-15);
        assert!((op.mu(2) - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn periodic_kernel_and_first_level() {
        let op = periodic_1d();
        assert_eq!(op.kernel_count(), 2);
        assert_eq!(op.resolution(), 512);
        let smallest = op.modes()[2..].iter().map(|m| m.mu.abs()).fold(f64::INFINITY, f64::min);
        assert!((smallest - 2.0 * PI).abs() < 1e-15);
        // + partner first in every pair
        for p in 0..op.pair_count() {
            assert!(op.mu(op.pair_index(p)) > 0.0);
            assert_eq!(op.mu(op.pair_index(p)), -op.mu(op.pair_index(p) + 1));
        }
    }

    #[test]
    fn square_ordering_breaks_ties_lexicographically() {
        let levels = square_levels(6);
        assert_eq!(levels, vec![(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]);
        let op = dirichlet_square_2d();
        assert!((op.mu(op.pair_index(0)) - PI * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(op.kernel_count(), 170);
        let mus: Vec<f64> = (0..op.pair_count()).map(|p| op.mu(op.pair_index(p))).collect();
        assert!(mus.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn graph_norm_of_single_mode() {
        let op = mixed_bc_1d();
        let mut v = vec![C64::new(0.0, 0.0); 4];
        v[0] = C64::new(1.0, 0.0);
        let expect = (1.0 + PI * PI / 4.0).sqrt();
        assert!((op.graph_norm(&v) - expect).abs() < 1e-15);
    }

    #[test]
    fn graph_norm_on_kernel_is_plain_norm() {
        let op = periodic_1d();
        let v = [C64::new(3.0, 0.0), C64::new(0.0, 4.0)];
        assert_eq!(op.graph_norm(&v), 5.0);
    }

    #[test]
    fn names_round_trip() {
        for i in [Instance::Mixed1d, Instance::Periodic1d, Instance::DirichletSquare2d] {
            assert_eq!(Instance::from_name(i.name()), Some(i));
        }
        assert_eq!(Instance::from_name("neumann"), None);
    }
}
