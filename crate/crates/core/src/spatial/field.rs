//! Closed-form mode fields.
//!
//! Every catalog field is a finite sum of separable terms whose 1D factors
//! are trigonometric polynomials `Σ c e^{i h π x / 2}` on `(0, 1)` with integer
//! `h`. Restricting frequencies to the lattice `(π/2)ℤ` makes `e^{iw}` exact,
//! so inner products between modes have no cancellation noise and exact
//! zeros stay exact.

use std::f64::consts::PI;

use crate::linalg::{C64, I};

/// `e^{i h π / 2}` evaluated exactly.
fn unit_root(h: i64) -> C64 {
    match h.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `∫_0^1 e^{i h π x / 2} dx`.
fn exp_integral(h: i64) -> C64 {
    if h == 0 {
        return C64::new(1.0, 0.0);
    }
    let w = h as f64 * PI / 2.0;
    (unit_root(h) - 1.0) / (I * w)
}

/// A 1D factor `Σ_r c_r e^{i h_r π x / 2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trig1d {
    terms: Vec<(C64, i64)>,
}

impl Trig1d {
    pub fn one() -> Self {
        Self {
            terms: vec![(C64::new(1.0, 0.0), 0)],
        }
    }

    /// `sin(h π x / 2)`
    pub fn sin(h: i64) -> Self {
        Self {
            terms: vec![(C64::new(0.0, -0.5), h), (C64::new(0.0, 0.5), -h)],
        }
    }

    /// `cos(h π x / 2)`
    pub fn cos(h: i64) -> Self {
        Self {
            terms: vec![(C64::new(0.5, 0.0), h), (C64::new(0.5, 0.0), -h)],
        }
    }

    /// `e^{i h π x / 2}`
    pub fn exp(h: i64) -> Self {
        Self {
            terms: vec![(C64::new(1.0, 0.0), h)],
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.terms
            .iter()
            .map(|&(c, h)| c * C64::from_polar(1.0, h as f64 * PI / 2.0 * x))
            .sum()
    }

    pub fn derivative(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|&(c, h)| (c * I * (h as f64 * PI / 2.0), h))
                .collect(),
        }
    }

    /// `∫_0^1 conj(self) · other dx`
    pub fn inner(&self, other: &Self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(a, ha) in &self.terms {
            for &(b, hb) in &other.terms {
                acc += a.conj() * b * exp_integral(hb - ha);
            }
        }
        acc
    }
}

/// `coeff · Π_axis factors[axis](x_axis)`
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub factors: Vec<Trig1d>,
}

impl Term {
    pub fn new(coeff: C64, factors: Vec<Trig1d>) -> Self {
        Self { coeff, factors }
    }

    fn eval(&self, x: &[f64]) -> C64 {
        self.factors
            .iter()
            .zip(x)
            .fold(self.coeff, |acc, (f, &xi)| acc * f.eval(xi))
    }

    fn partial(&self, axis: usize) -> Self {
        let mut factors = self.factors.clone();
        factors[axis] = factors[axis].derivative();
        Self {
            coeff: self.coeff,
            factors,
        }
    }

    fn inner(&self, other: &Self) -> C64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .fold(self.coeff.conj() * other.coeff, |acc, (a, b)| acc * a.inner(b))
    }
}

/// A vector field with one scalar component per coefficient slot
/// (`θ` first, then the flux components).
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub components: Vec<Vec<Term>>,
}

impl Field {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<C64> {
        self.components
            .iter()
            .map(|terms| terms.iter().map(|t| t.eval(x)).sum())
            .collect()
    }

    /// Partial derivative of component `comp` along `axis`, evaluated at `x`.
    pub fn eval_partial(&self, comp: usize, axis: usize, x: &[f64]) -> C64 {
        self.components[comp].iter().map(|t| t.partial(axis).eval(x)).sum()
    }

    /// `∫ conj(self_p) · other_q` over the unit cube.
    pub fn component_inner(&self, p: usize, other: &Field, q: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.components[p] {
            for b in &other.components[q] {
                acc += a.inner(b);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_integrals_of_basic_factors() {
        // ∫ sin²(πx/2·3) = 1/2 at odd multiples of π/2
        let s = Trig1d::sin(3);
        assert!((s.inner(&s) - C64::new(0.5, 0.0)).norm() < 1e-15);
        // ∫ sin(kπx) cos(kπx) = 0 exactly
        assert_eq!(Trig1d::sin(4).inner(&Trig1d::cos(4)).norm(), 0.0);
        // ∫ sin(πx) cos(2πx) = 1·(1-(-1)^3)/(π(1-4)) = -2/(3π)
        let v = Trig1d::sin(2).inner(&Trig1d::cos(4));
        assert!((v.re + 2.0 / (3.0 * PI)).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!((Trig1d::one().inner(&Trig1d::exp(4))).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = Trig1d::sin(5);
        let d = f.derivative();
        let h = 1e-5;
        for &x in &[0.1, 0.37, 0.9] {
            let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert!((fd - d.eval(x)).norm() < 1e-7);
        }
    }
}
