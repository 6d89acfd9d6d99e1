//! Exponentially weighted time signals on a finite window and their discrete
//! Fourier–Laplace transform.
//!
//! A [`WeightedSignal`] stores raw samples `f(t_k)` at `t_k = k·dt`; the weight
//! `e^{-ν t}` lives in the [`TimeGrid`] and is applied by the transform. The
//! forward transform is the DFT of `k ↦ e^{-ν t_k} f(t_k)` scaled by
//! `dt/√(2π)`, and mode `j` sits at the frequency point `z_j = iξ_j + ν`
//! with `ξ_j = 2π·wrap(j)/T`, `wrap(j)` the signed alias in `(−N/2, N/2]`.
//!
//! With this normalisation the discrete Plancherel identity reads
//!
//! ```text
//! Σ_k e^{-2ν t_k} ‖f(t_k)‖² dt  =  (2π/T) Σ_j ‖f̂_j‖²
//! ```
//!
//! so [`weighted_norm`] and [`spectral_norm`] agree exactly up to rounding.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_finite, C64};

pub const DEFAULT_EPS_WRAP: f64 = 1e-8;

/// Uniform sampling of the window `[0, T)` together with the weight `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_len: f64,
    n: usize,
    nu: f64,
    eps_wrap: f64,
    support_end: f64,
}

impl TimeGrid {
    /// Grid with the default wrap tolerance and support window `[0, T/2]`.
    pub fn new(t_len: f64, n: usize, nu: f64) -> Result<Self> {
        Self::with_tolerance(t_len, n, nu, DEFAULT_EPS_WRAP)
    }

    pub fn with_tolerance(t_len: f64, n: usize, nu: f64, eps_wrap: f64) -> Result<Self> {
        if !(t_len.is_finite() && t_len > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "window length must be positive, got {t_len}"
            )));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "sample count must be a power of two >= 2, got {n}"
            )));
        }
        if !(eps_wrap > 0.0 && eps_wrap < 1.0) {
            return Err(Error::InvalidGrid(format!(
                "eps_wrap must lie in (0, 1), got {eps_wrap}"
            )));
        }
        if !nu.is_finite() {
            return Err(Error::InvalidGrid("nu must be finite".into()));
        }
        let needed = (1.0 / eps_wrap).ln();
        if nu * t_len < needed {
            return Err(Error::InvalidGrid(format!(
                "nu*T = {} is below ln(1/eps_wrap) = {needed:.6}",
                nu * t_len
            )));
        }
        Ok(Self {
            t_len,
            n,
            nu,
            eps_wrap,
            support_end: 0.5 * t_len,
        })
    }

    /// Moves the end of the admissible forcing support (default `T/2`).
    pub fn with_support_end(mut self, support_end: f64) -> Result<Self> {
        if !(support_end > 0.0 && support_end <= self.t_len) {
            return Err(Error::InvalidGrid(format!(
                "support end {support_end} outside (0, {}]",
                self.t_len
            )));
        }
        self.support_end = support_end;
        Ok(self)
    }

    /// Same window and sampling, different weight.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Self::with_tolerance(self.t_len, self.n, nu, self.eps_wrap)?.with_support_end(self.support_end)
    }

    pub fn t_len(&self) -> f64 {
        self.t_len
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn eps_wrap(&self) -> f64 {
        self.eps_wrap
    }
    pub fn support_end(&self) -> f64 {
        self.support_end
    }
    pub fn dt(&self) -> f64 {
        self.t_len / self.n as f64
    }
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.time(k))
    }

    /// Signed alias of mode index `j` in `(−N/2, N/2]`.
    pub fn wrap(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular frequency `ξ_j = 2π wrap(j) / T`.
    pub fn xi(&self, j: usize) -> f64 {
        2.0 * PI * self.wrap(j) as f64 / self.t_len
    }

    /// Frequency spacing `2π/T`, the quadrature weight of the spectral norm.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.t_len
    }

    /// Mode index carrying frequency `-ξ_j`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }
}

/// Time-sampled vector-valued function, an element of `L_{2,ν}` at desk scale.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSignal {
    grid: TimeGrid,
    dim: usize,
    values: Vec<C64>,
}

/// Spectrum of a [`WeightedSignal`], one coefficient vector per frequency point.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySignal {
    grid: TimeGrid,
    dim: usize,
    values: Vec<C64>,
}

macro_rules! sample_storage {
    ($ty:ident) => {
        impl $ty {
            /// Row-major storage: entry `k * dim + i` is component `i` at index `k`.
            pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<C64>) -> Result<Self> {
                if dim == 0 {
                    return Err(Error::InvalidSignal("dimension must be at least 1".into()));
                }
                if values.len() != grid.len() * dim {
                    return Err(Error::DimensionMismatch {
                        expected: grid.len() * dim,
                        found: values.len(),
                    });
                }
                if !is_finite(&values) {
                    return Err(Error::InvalidSignal("non-finite sample".into()));
                }
                Ok(Self { grid, dim, values })
            }

            pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
                assert!(dim > 0);
                Self {
                    grid,
                    dim,
                    values: vec![C64::new(0.0, 0.0); grid.len() * dim],
                }
            }

            /// Builds the signal from a per-index closure filling one coefficient vector.
            pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(usize, &mut [C64])) -> Result<Self> {
                let mut s = Self::zeros(grid, dim);
                for (k, row) in s.values.chunks_mut(dim).enumerate() {
                    f(k, row);
                }
                Self::from_values(grid, dim, s.values)
            }

            pub fn grid(&self) -> &TimeGrid {
                &self.grid
            }
            pub fn dim(&self) -> usize {
                self.dim
            }
            pub fn values(&self) -> &[C64] {
                &self.values
            }
            pub fn into_values(self) -> Vec<C64> {
                self.values
            }
            pub fn at(&self, k: usize) -> &[C64] {
                &self.values[k * self.dim..(k + 1) * self.dim]
            }
            pub fn rows(&self) -> std::slice::ChunksExact<'_, C64> {
                self.values.chunks_exact(self.dim)
            }

            pub fn scale(&self, alpha: C64) -> Self {
                Self {
                    grid: self.grid,
                    dim: self.dim,
                    values: self.values.iter().map(|v| alpha * v).collect(),
                }
            }

            /// `alpha * self + other`.
            pub fn axpy(&self, alpha: C64, other: &Self) -> Result<Self> {
                self.check_compatible(other)?;
                Ok(Self {
                    grid: self.grid,
                    dim: self.dim,
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(a, b)| alpha * a + b)
                        .collect(),
                })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                other.axpy(C64::new(-1.0, 0.0), self)
            }

            fn check_compatible(&self, other: &Self) -> Result<()> {
                if self.dim != other.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: other.dim,
                    });
                }
                if self.grid != other.grid {
                    return Err(Error::IncompatibleGrids("signals live on different grids".into()));
                }
                Ok(())
            }
        }
    };
}

sample_storage!(WeightedSignal);
sample_storage!(FrequencySignal);

impl FrequencySignal {
    /// Frequency point `z_j = iξ_j + ν` of mode `j`.
    pub fn frequency(&self, j: usize) -> C64 {
        C64::new(self.grid.nu(), self.grid.xi(j))
    }
}

/// Transforms each component column of a row-major `n × dim` array in place.
fn transform_columns(values: &mut [C64], n: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut column = vec![C64::new(0.0, 0.0); n];
    for i in 0..dim {
        for k in 0..n {
            column[k] = values[k * dim + i];
        }
        fft.process(&mut column);
        for k in 0..n {
            values[k * dim + i] = column[k];
        }
    }
}

/// Discrete Fourier–Laplace transform `k ↦ e^{-νt_k} f(t_k)` followed by the
/// DFT, normalised by `dt/√(2π)`.
pub fn fourier_laplace(f: &WeightedSignal) -> FrequencySignal {
    let grid = *f.grid();
    let (n, dim) = (grid.len(), f.dim());
    let mut values = f.values().to_vec();
    for k in 0..n {
        let w = (-grid.nu() * grid.time(k)).exp();
        for v in &mut values[k * dim..(k + 1) * dim] {
            *v *= w;
        }
    }
    transform_columns(&mut values, n, dim, false);
    let norm = grid.dt() / (2.0 * PI).sqrt();
    for v in &mut values {
        *v *= norm;
    }
    FrequencySignal { grid, dim, values }
}

/// Exact inverse of [`fourier_laplace`].
pub fn inverse_fourier_laplace(g: &FrequencySignal) -> WeightedSignal {
    let grid = *g.grid();
    let (n, dim) = (grid.len(), g.dim());
    let mut values = g.values().to_vec();
    transform_columns(&mut values, n, dim, true);
    let norm = (2.0 * PI).sqrt() / (grid.dt() * n as f64);
    for k in 0..n {
        let w = norm * (grid.nu() * grid.time(k)).exp();
        for v in &mut values[k * dim..(k + 1) * dim] {
            *v *= w;
        }
    }
    WeightedSignal { grid, dim, values }
}

/// `(Σ_k e^{-2νt_k} ‖f(t_k)‖² dt)^{1/2}`.
pub fn weighted_norm(f: &WeightedSignal) -> f64 {
    weighted_norm_with(f, |_, _| 1.0)
}

/// Weighted norm with a per-component weight `w(k, i)` on `|f_i(t_k)|²`
/// (used for graph norms of modal signals).
pub fn weighted_norm_with(f: &WeightedSignal, weight: impl Fn(usize, usize) -> f64) -> f64 {
    let grid = f.grid();
    let dt = grid.dt();
    let mut acc = 0.0;
    for (k, row) in f.rows().enumerate() {
        let w = (-2.0 * grid.nu() * grid.time(k)).exp();
        let s: f64 = row.iter().enumerate().map(|(i, v)| weight(k, i) * v.norm_sqr()).sum();
        acc += w * s;
    }
    (acc * dt).sqrt()
}

/// `((2π/T) Σ_j ‖ĝ_j‖²)^{1/2}`; equals `weighted_norm` of the inverse transform.
pub fn spectral_norm(g: &FrequencySignal) -> f64 {
    spectral_norm_with(g, |_, _| 1.0)
}

pub fn spectral_norm_with(g: &FrequencySignal, weight: impl Fn(usize, usize) -> f64) -> f64 {
    let acc: f64 = g
        .rows()
        .enumerate()
        .map(|(j, row)| {
            row.iter()
                .enumerate()
                .map(|(i, v)| weight(j, i) * v.norm_sqr())
                .sum::<f64>()
        })
        .sum();
    (acc * g.grid().dxi()).sqrt()
}

/// Multipliers `z_j = iξ_j + ν` realising `∂_{t,ν}` on the spectrum.
pub fn derivative_symbol(grid: &TimeGrid) -> Vec<C64> {
    (0..grid.len()).map(|j| C64::new(grid.nu(), grid.xi(j))).collect()
}

/// Writes the columnar text format: header `t,re(c_1),im(c_1),...` and one
/// row per sample with 17 significant digits.
pub fn write_csv(f: &WeightedSignal, out: &mut impl Write) -> std::io::Result<()> {
    let mut header = String::from("t");
    for i in 1..=f.dim() {
        write!(header, ",re(c_{i}),im(c_{i})").unwrap();
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (k, row) in f.rows().enumerate() {
        line.clear();
        write!(line, "{:.16e}", f.grid().time(k)).unwrap();
        for v in row {
            write!(line, ",{:.16e},{:.16e}", v.re, v.im).unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads the format produced by [`write_csv`] onto `grid`.
pub fn read_csv(grid: TimeGrid, input: impl BufRead) -> Result<WeightedSignal> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidSignal("empty signal file".into()))??;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 3 || cols.len().is_multiple_of(2) {
        return Err(Error::InvalidSignal(format!("unexpected header `{header}`")));
    }
    let dim = (cols.len() - 1) / 2;
    let mut values = Vec::with_capacity(grid.len() * dim);
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::InvalidSignal(format!("row {k}: {e}")))?;
        if nums.len() != 1 + 2 * dim {
            return Err(Error::InvalidSignal(format!("row {k} has {} columns", nums.len())));
        }
        if (nums[0] - grid.time(k)).abs() > 1e-9 * grid.t_len() {
            return Err(Error::InvalidSignal(format!("row {k} time {} off grid", nums[0])));
        }
        values.extend(nums[1..].chunks_exact(2).map(|p| C64::new(p[0], p[1])));
        rows += 1;
    }
    if rows != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: rows,
        });
    }
    WeightedSignal::from_values(grid, dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(8.0, 64, 2.5).unwrap()
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(TimeGrid::new(8.0, 60, 2.5).is_err());
        assert!(TimeGrid::new(8.0, 1, 2.5).is_err());
        assert!(TimeGrid::new(-1.0, 64, 2.5).is_err());
        // nu*T = 8 < ln(1e8)
        assert!(TimeGrid::new(8.0, 64, 1.0).is_err());
        assert!(TimeGrid::with_tolerance(8.0, 64, 1.0, 1e-3).is_ok());
        assert!(grid().with_support_end(9.0).is_err());
    }

    #[test]
    fn dt_times_n_is_window() {
        let g = grid();
        assert_eq!(g.dt() * g.len() as f64, g.t_len());
        assert_eq!(g.support_end(), 4.0);
    }

    #[test]
    fn derivative_symbol_small_grid() {
        let g = TimeGrid::with_tolerance(2.0 * PI, 4, 1.0, 1e-2).unwrap();
        let z = derivative_symbol(&g);
        let expect = [
            C64::new(1.0, 0.0),
            C64::new(1.0, 1.0),
            C64::new(1.0, 2.0),
            C64::new(1.0, -1.0),
        ];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).norm() < 1e-14);
            assert_eq!(a.re, 1.0);
        }
    }

    #[test]
    fn zero_signal_transforms_to_zero() {
        let f = WeightedSignal::zeros(grid(), 2);
        let g = fourier_laplace(&f);
        assert!(g.values().iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert_eq!(weighted_norm(&f), 0.0);
        let back = inverse_fourier_laplace(&FrequencySignal::zeros(grid(), 2));
        assert!(back.values().iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn pure_mode_concentrates() {
        let g = grid();
        let f = WeightedSignal::from_fn(g, 2, |k, row| {
            let t = g.time(k);
            row[0] = (g.nu() * t).exp() * C64::from_polar(1.0, g.xi(1) * t);
        })
        .unwrap();
        let s = fourier_laplace(&f);
        let peak = s.at(1)[0].norm();
        assert!(peak > 0.0);
        for (j, row) in s.rows().enumerate() {
            for (i, v) in row.iter().enumerate() {
                if (j, i) != (1, 0) {
                    assert!(v.norm() <= 1e-12 * peak, "mode {j} comp {i}: {v}");
                }
            }
        }
        // inverse of the single-mode spectrum is the weighted exponential
        let mut spec = FrequencySignal::zeros(g, 2);
        let mut vals = spec.clone().into_values();
        vals[2] = s.at(1)[0];
        spec = FrequencySignal::from_values(g, 2, vals).unwrap();
        let back = inverse_fourier_laplace(&spec);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn homogeneity_of_norm() {
        let g = grid();
        let f = WeightedSignal::from_fn(g, 1, |k, row| row[0] = C64::new(g.time(k).sin(), 1.0)).unwrap();
        let a = weighted_norm(&f.scale(C64::new(3.0, 0.0)));
        assert!((a - 3.0 * weighted_norm(&f)).abs() < 1e-14 * a);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = grid();
        let f = WeightedSignal::from_fn(g, 2, |k, row| {
            row[0] = C64::new((k as f64).sqrt(), -1.0 / (1.0 + k as f64));
            row[1] = C64::new(1e-300, 7.0e200);
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,re(c_1),im(c_1),re(c_2),im(c_2)\n"));
        let back = read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_wrong_row_count() {
        let g = grid();
        let err = read_csv(g, "t,re(c_1),im(c_1)\n0,1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }
}
