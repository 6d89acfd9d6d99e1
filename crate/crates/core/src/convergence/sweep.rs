//! Galerkin sweeps against a full-resolution reference solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::table::{Check, ConvergenceRow, ConvergenceTable, Defect, TableKind};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, C64};
use crate::solver::{apply_spectrum, solve_spectrum, EvolutionaryProblem, SolvePath, Symbol};
use crate::spaces::{
    fourier_laplace, inverse_fourier_laplace, spectral_norm, FrequencySignal, TimeGrid, WeightedSignal,
};
use crate::spatial::{GalerkinScheme, SpatialOperator};

const REL_SLACK: f64 = 1e-9;
const ABS_SLACK: f64 = 1e-12;

/// A scheme together with its assembled symbol.
#[derive(Clone)]
pub struct SchemeSymbol {
    pub scheme: GalerkinScheme,
    pub symbol: Symbol,
}

impl SchemeSymbol {
    pub fn new(problem: &EvolutionaryProblem, scheme: GalerkinScheme) -> Result<Self> {
        let symbol = Symbol::new(problem, &scheme)?;
        Ok(Self { scheme, symbol })
    }

    /// Every mode of the problem's operator.
    pub fn full(problem: &EvolutionaryProblem) -> Result<Self> {
        Self::new(problem, GalerkinScheme::full(problem.operator().clone()))
    }

    fn is_full(&self) -> bool {
        self.scheme.n_total() == self.scheme.operator().resolution()
    }
}

/// Smooth scalar time profile of a manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    /// `exp(1 − 1/(1 − s²))` on `(start, end)` mapped to `s ∈ (−1, 1)`.
    Bump { start: f64, end: f64 },
    /// `sin⁸(π (t − start)/(end − start))` on `[start, end]`.
    Sin8 { start: f64, end: f64 },
}

impl TimeProfile {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            TimeProfile::Bump { start, end } | TimeProfile::Sin8 { start, end } => (start, end),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (a, b) = self.support();
        if t <= a || t >= b {
            return 0.0;
        }
        match self {
            TimeProfile::Bump { .. } => {
                let s = (2.0 * t - a - b) / (b - a);
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            }
            TimeProfile::Sin8 { .. } => (std::f64::consts::PI * (t - a) / (b - a)).sin().powi(8),
        }
    }
}

/// Modal trajectory `u_j(t) = (1 + μ_j²)^{-p} e^{i j/2} profile(t)` on the
/// first `n_kernel` kernel modes and the first `n_pairs` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub n_pairs: usize,
    #[serde(default)]
    pub n_kernel: usize,
    pub decay: f64,
    pub profile: TimeProfile,
}

impl Excitation {
    pub fn coefficient(&self, op: &SpatialOperator, index: usize) -> C64 {
        let excited = if index < op.kernel_count() {
            index < self.n_kernel
        } else {
            (index - op.kernel_count()) / 2 < self.n_pairs
        };
        if !excited {
            return C64::new(0.0, 0.0);
        }
        let mu = op.mu(index);
        C64::from_polar((1.0 + mu * mu).powf(-self.decay), 0.5 * index as f64)
    }
}

/// Samples an [`Excitation`] at full resolution.
pub fn manufactured_solution(grid: &TimeGrid, op: &SpatialOperator, exc: &Excitation) -> Result<WeightedSignal> {
    if exc.n_pairs > op.pair_count() {
        return Err(Error::InsufficientResolution {
            needed: exc.n_pairs,
            found: op.pair_count(),
        });
    }
    if exc.n_kernel > op.kernel_count() {
        return Err(Error::InsufficientResolution {
            needed: exc.n_kernel,
            found: op.kernel_count(),
        });
    }
    let (a, b) = exc.profile.support();
    if !(0.0 <= a && a < b && b <= grid.support_end()) {
        return Err(Error::InvalidSignal(format!(
            "profile support [{a}, {b}] must lie in [0, {}]",
            grid.support_end()
        )));
    }
    let coeffs: Vec<C64> = (0..op.resolution()).map(|i| exc.coefficient(op, i)).collect();
    WeightedSignal::from_fn(*grid, op.resolution(), |k, row| {
        let s = exc.profile.eval(grid.time(k));
        for (r, c) in row.iter_mut().zip(&coeffs) {
            *r = c * s;
        }
    })
}

/// `f` with `f̂(z) = (z M(z) + A) û(z)` at full resolution, so that solving
/// with `f` returns `u_exact`.
pub fn manufactured_forcing(
    problem: &EvolutionaryProblem,
    full: &SchemeSymbol,
    u_exact: &WeightedSignal,
) -> Result<WeightedSignal> {
    let r = full.scheme.n_total();
    if u_exact.dim() > r {
        return Err(Error::InsufficientResolution {
            needed: u_exact.dim(),
            found: r,
        });
    }
    if !full.is_full() || u_exact.dim() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: u_exact.dim(),
        });
    }
    let (g, pg) = (u_exact.grid(), problem.grid());
    if g.len() != pg.len() || g.t_len() != pg.t_len() || g.nu() != pg.nu() {
        return Err(Error::IncompatibleGrids(
            "solution is not sampled on the problem grid".into(),
        ));
    }
    let f_hat = apply_spectrum(&full.symbol, &fourier_laplace(u_exact))?;
    Ok(inverse_fourier_laplace(&f_hat))
}

fn tail_norms(scheme: &GalerkinScheme, v: &[C64]) -> (f64, f64) {
    let op = scheme.operator();
    let mut inside = vec![false; v.len()];
    for &i in scheme.selected() {
        if i < inside.len() {
            inside[i] = true;
        }
    }
    let (mut h, mut g) = (0.0, 0.0);
    for (i, c) in v.iter().enumerate() {
        if !inside[i] {
            let s = c.norm_sqr();
            h += s;
            g += (1.0 + op.mu(i).powi(2)) * s;
        }
    }
    (h, g)
}

/// Defects of `part` relative to the full-resolution symbol at frequency
/// `z`, for full-basis coefficients `w`.
pub fn strong_convergence_defect(full: &SchemeSymbol, part: &SchemeSymbol, z: C64, w: &[C64]) -> Result<Defect> {
    if !full.is_full() {
        return Err(Error::InvalidScheme("reference scheme must contain every mode".into()));
    }
    if w.len() != full.scheme.n_total() {
        return Err(Error::DimensionMismatch {
            expected: full.scheme.n_total(),
            found: w.len(),
        });
    }
    let kw = full.symbol.apply_at(z, w);
    let pkw = part.scheme.apply_p(&kw)?;
    let pw = part.scheme.apply_p(w)?;
    let kpw = part.symbol.apply_at(z, pw.as_slice());
    let consistency = pkw
        .iter()
        .zip(&kpw)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let (h, g) = tail_norms(&part.scheme, w);
    Ok(Defect {
        consistency,
        projection_graph: g.sqrt(),
        projection_h: h.sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Relative slack on the `err ≤ tail/c` check.
    pub slack: f64,
    /// Pair count of the excitation, enabling the exactness check.
    pub excited_pairs: Option<usize>,
    pub exact_tol: f64,
    pub seed: Option<u64>,
    /// Kernel modes per level; defaults to `min(n, kernel count)`.
    pub n_kernel: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            slack: 0.1,
            excited_pairs: None,
            exact_tol: 1e-8,
            seed: None,
            n_kernel: None,
        }
    }
}

struct Level {
    row: ConvergenceRow,
    lifting: (f64, f64),
    n_kernel: usize,
}

/// Solves on `n` pairs (plus `min(n, kernel count)` kernel modes unless
/// overridden) for every
/// `n` in `ns` and measures the space-time errors against the
/// full-resolution solution.
pub fn convergence_sweep(
    problem: &EvolutionaryProblem,
    full: &SchemeSymbol,
    f: &WeightedSignal,
    ns: &[usize],
    opts: &SweepOptions,
) -> Result<ConvergenceTable> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidScheme(
            "ns must be nonempty and strictly ascending".into(),
        ));
    }
    if !full.is_full() {
        return Err(Error::InvalidScheme("reference scheme must contain every mode".into()));
    }
    let op_arc = problem.operator().clone();
    let op = op_arc.as_ref();
    if f.dim() != op.resolution() {
        return Err(Error::DimensionMismatch {
            expected: op.resolution(),
            found: f.dim(),
        });
    }
    let grid = *f.grid();
    let c = problem.c();
    let f_hat = fourier_laplace(f);
    let u_hat = solve_spectrum(&full.symbol, &f_hat, SolvePath::Auto)?;
    let norm_u = spectral_norm(&u_hat);
    let norm_f = spectral_norm(&f_hat);
    let w_d: Vec<f64> = (0..grid.len()).map(|m| op.graph_norm(u_hat.at(m))).collect();
    let resolvent: Vec<f64> = (0..grid.len())
        .map(|m| {
            let d = full.symbol.law_norm_at(u_hat.frequency(m));
            (1.0 + c * c + d * d).sqrt() / c
        })
        .collect();
    let abs = ABS_SLACK * norm_u.max(norm_f).max(f64::MIN_POSITIVE);

    let levels: Vec<Level> = ns
        .par_iter()
        .map(|&n| -> Result<Level> {
            let n_kernel = opts.n_kernel.unwrap_or(n).min(op.kernel_count());
            let part = SchemeSymbol::new(problem, GalerkinScheme::build(op_arc.clone(), n, n_kernel)?)?;
            let mut fn_values = Vec::with_capacity(grid.len() * part.scheme.n_total());
            for row in f_hat.rows() {
                fn_values.extend(part.scheme.apply_p(row)?.iter());
            }
            let fn_hat = FrequencySignal::from_values(grid, part.scheme.n_total(), fn_values)?;
            let un_hat = solve_spectrum(&part.symbol, &fn_hat, SolvePath::Auto)?;
            let (mut eh, mut eg, mut bg, mut bh, mut tail) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let (mut g_n, mut h_n, mut ratio) = (0.0f64, 0.0f64, 0.0f64);
            for m in 0..grid.len() {
                let z = u_hat.frequency(m);
                let w = u_hat.at(m);
                let emb = part.scheme.embed_j(un_hat.at(m))?;
                let (mut e2h, mut e2g) = (0.0, 0.0);
                for (i, (a, b)) in emb.iter().zip(w).enumerate() {
                    let s = (a - b).norm_sqr();
                    e2h += s;
                    e2g += (1.0 + op.mu(i).powi(2)) * s;
                }
                eh += e2h;
                eg += e2g;
                let defect = strong_convergence_defect(full, &part, z, w)?;
                bg += ((resolvent[m] + 1.0) * defect.g()).powi(2);
                bh += ((1.0 / c + 1.0) * defect.h()).powi(2);
                if w_d[m] > 0.0 {
                    g_n = g_n.max(defect.g() / w_d[m]);
                    h_n = h_n.max(defect.h() / w_d[m]);
                }
                tail += tail_norms(&part.scheme, f_hat.at(m)).1;
                let fm = norm_sq(f_hat.at(m));
                if fm > 0.0 {
                    ratio = ratio.max((e2h / fm).sqrt());
                } else if e2h > 0.0 {
                    ratio = f64::INFINITY;
                }
            }
            let dxi = grid.dxi();
            let (err_h, err_graph) = ((eh * dxi).sqrt(), (eg * dxi).sqrt());
            let (bound_graph, bound_h) = ((bg * dxi).sqrt(), (bh * dxi).sqrt());
            let tail_bound = (tail * dxi).sqrt();
            let pass = err_graph <= bound_graph * (1.0 + REL_SLACK) + abs
                && err_h <= bound_h * (1.0 + REL_SLACK) + abs
                && err_h <= (1.0 + opts.slack) * tail_bound / c + abs;
            Ok(Level {
                row: ConvergenceRow {
                    n,
                    err_h,
                    err_graph,
                    g_n,
                    h_n,
                    bound_graph,
                    bound_h,
                    pass,
                    tail_bound: Some(tail_bound),
                    resolvent_norm: None,
                },
                lifting: (err_h, ratio * norm_f),
                n_kernel,
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<ConvergenceRow> = levels.iter().map(|l| l.row.clone()).collect();
    let mono = |get: fn(&ConvergenceRow) -> f64| {
        rows.windows(2)
            .map(move |w| (get(&w[1]), get(&w[0]) * (1.0 + REL_SLACK) + abs))
            .collect::<Vec<_>>()
    };
    let mut checks = vec![
        Check::all_le(
            "rate_graph",
            rows.iter()
                .map(|r| (r.err_graph, r.bound_graph * (1.0 + REL_SLACK) + abs)),
        ),
        Check::all_le(
            "rate_h",
            rows.iter().map(|r| (r.err_h, r.bound_h * (1.0 + REL_SLACK) + abs)),
        ),
        Check::all_le(
            "tail_bound",
            rows.iter()
                .map(|r| (r.err_h, (1.0 + opts.slack) * r.tail_bound.unwrap() / c + abs)),
        ),
        Check::all_le(
            "lifting",
            levels
                .iter()
                .map(|l| (l.lifting.0, l.lifting.1 * (1.0 + REL_SLACK) + abs)),
        ),
        Check::all_le("monotone_err_h", mono(|r| r.err_h)),
        Check::all_le("monotone_err_graph", mono(|r| r.err_graph)),
        Check::all_le(
            "monotone_g_n",
            rows.windows(2)
                .map(|w| (w[1].g_n, w[0].g_n * (1.0 + REL_SLACK) + ABS_SLACK)),
        ),
        Check::all_le(
            "monotone_h_n",
            rows.windows(2)
                .map(|w| (w[1].h_n, w[0].h_n * (1.0 + REL_SLACK) + ABS_SLACK)),
        ),
    ];
    if let Some(k) = opts.excited_pairs {
        let scale = norm_u.max(f64::MIN_POSITIVE);
        checks.push(Check::all_le(
            "exactness",
            rows.iter()
                .filter(|r| r.n >= k)
                .map(|r| (r.err_h / scale, opts.exact_tol)),
        ));
    }
    if let Some(last) = levels
        .last()
        .filter(|l| l.row.n == op.pair_count() && l.n_kernel == op.kernel_count())
    {
        checks.push(Check::all_le(
            "identified_limit",
            [(last.row.err_h, 1e-10 * norm_u.max(f64::MIN_POSITIVE))],
        ));
    }

    let descriptor = json!({
        "operator": op.name(),
        "law": problem.law().name(),
        "nu": grid.nu(),
        "t_len": grid.t_len(),
        "n_samples": grid.len(),
        "eps_wrap": grid.eps_wrap(),
        "support_end": grid.support_end(),
        "c": c,
        "resolution": op.resolution(),
        "ns": ns,
        "n_kernel": levels.iter().map(|l| l.n_kernel).collect::<Vec<_>>(),
        "slack": opts.slack,
        "norm_u": norm_u,
        "norm_f": norm_f,
    });
    Ok(ConvergenceTable {
        kind: TableKind::Sweep,
        seed: opts.seed,
        descriptor,
        rows,
        checks,
    })
}
