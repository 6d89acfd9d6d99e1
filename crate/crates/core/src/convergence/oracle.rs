//! Brute-force resolvent convergence on random matrices.
//!
//! `H = ℂ^m`, `A` skew-Hermitian, `T` with `Herm T ⪰ c` and `‖T‖ ≤ d`, and
//! nested subspaces `H_n` spanned by the first `n` columns of an orthonormal
//! basis `Q`. Then `P_n = Q_n^*`, `J_n = Q_n`, `T_n = Q_n^* T Q_n` and
//! `A_n = Q_n^* A Q_n`.

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use super::table::{Check, ConvergenceRow, ConvergenceTable, Defect, TableKind};
use crate::error::{Error, Result};
use crate::linalg::{dense_solve, hermitian_part, lambda_min_hermitian, op_norm, CMat, CVec, C64};

const REL_SLACK: f64 = 1e-9;
const ABS_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct OracleInstance {
    pub m: usize,
    pub a: CMat,
    pub t: CMat,
    pub basis: CMat,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
}

/// splitmix64 step, used to derive per-instance seeds from one master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian(m: usize, rng: &mut ChaCha8Rng) -> CMat {
    gaussian_rect(m, m, rng)
}

fn gaussian_rect(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Standard complex Gaussian vector of length `m`.
pub fn random_datum(m: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gaussian_rect(m, 1, &mut rng).column(0).into_owned()
}

impl OracleInstance {
    /// Random instance with `c ≤ Herm T`, `‖T‖ ≤ d` by construction.
    pub fn generate(m: usize, c: f64, d: f64, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        if !(c > 0.0 && d >= c && d.is_finite()) {
            return Err(Error::InvalidInstance(format!("need 0 < c <= d, got c = {c}, d = {d}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = gaussian(m, &mut rng);
        let a = (&b - b.adjoint()).scale(0.5);
        let cm = gaussian(m, &mut rng);
        let gram = cm.adjoint() * &cm;
        let t = CMat::identity(m, m) * C64::from(c) + gram.scale((d - c) / op_norm(&gram));
        let basis = gaussian(m, &mut rng).qr().q();
        Self::from_parts(a, t, basis, c, d, seed)
    }

    /// Validates the instance invariants.
    pub fn from_parts(a: CMat, t: CMat, basis: CMat, c: f64, d: f64, seed: u64) -> Result<Self> {
        let m = a.nrows();
        for (name, mat) in [("A", &a), ("T", &t), ("basis", &basis)] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::InvalidInstance(format!("{name} must be {m}x{m}")));
            }
        }
        if op_norm(&(&a + a.adjoint())) > 1e-12 {
            return Err(Error::InvalidInstance("A is not skew-Hermitian".into()));
        }
        if lambda_min_hermitian(&t) < c - 1e-12 {
            return Err(Error::InvalidInstance(format!(
                "Herm T is not bounded below by c = {c}"
            )));
        }
        if op_norm(&t) > d * (1.0 + 1e-12) {
            return Err(Error::InvalidInstance(format!("‖T‖ exceeds d = {d}")));
        }
        if op_norm(&(basis.adjoint() * &basis - CMat::identity(m, m))) > 1e-10 {
            return Err(Error::InvalidInstance("basis columns are not orthonormal".into()));
        }
        Ok(Self {
            m,
            a,
            t,
            basis,
            c,
            d,
            seed,
        })
    }

    /// `λ_min(Herm T)`.
    pub fn measured_c(&self) -> f64 {
        lambda_min_hermitian(&self.t)
    }

    /// `‖T‖`.
    pub fn measured_d(&self) -> f64 {
        op_norm(&self.t)
    }

    pub fn graph_norm(&self, x: &CVec) -> f64 {
        (x.norm_squared() + (&self.a * x).norm_squared()).sqrt()
    }

    fn q(&self, n: usize) -> CMat {
        self.basis.columns(0, n).into_owned()
    }

    /// `(T_n, A_n)` on the first `n` basis vectors.
    pub fn compress(&self, n: usize) -> (CMat, CMat) {
        let q = self.q(n);
        (q.adjoint() * &self.t * &q, q.adjoint() * &self.a * &q)
    }

    /// Defects of level `n` for the datum `w ∈ dom(A)`.
    pub fn defect(&self, n: usize, w: &CVec) -> Defect {
        let q = self.q(n);
        let (tn, an) = self.compress(n);
        let pw = q.adjoint() * w;
        let consistency = (q.adjoint() * ((&self.t + &self.a) * w) - (tn + an) * &pw).norm();
        let tail = w - &q * &pw;
        Defect {
            consistency,
            projection_graph: self.graph_norm(&tail),
            projection_h: tail.norm(),
        }
    }

    /// Norm of `J_n : (H_n, graph of A_n) → (H, graph of A)`.
    pub fn embedding_norm(&self, n: usize) -> f64 {
        let q = self.q(n);
        let (_, an) = self.compress(n);
        let hn = CMat::identity(n, n) + an.adjoint() * &an;
        let eig = SymmetricEigen::new(hermitian_part(&hn));
        let inv_sqrt = CMat::from_diagonal(&CVec::from_iterator(
            n,
            eig.eigenvalues.iter().map(|l| C64::from(l.powf(-0.5))),
        ));
        let s = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
        let h = CMat::identity(self.m, self.m) + self.a.adjoint() * &self.a;
        let k = &s * (q.adjoint() * h * &q) * &s;
        SymmetricEigen::new(hermitian_part(&k))
            .eigenvalues
            .max()
            .max(0.0)
            .sqrt()
    }
}

/// Oracle results for one instance and datum.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub m: usize,
    pub c_measured: f64,
    pub d_measured: f64,
    /// `√(1+c²+d²)/c` with the measured constants
    pub uniform_bound: f64,
    pub sup_embedding_norm: f64,
    pub solution_graph_norm: f64,
    pub all_invertible: bool,
    pub table: ConvergenceTable,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.table.pass()
    }

    /// Largest `lhs − rhs` over the quantitative checks; `≤ 0` when they hold.
    pub fn max_margin(&self) -> f64 {
        self.table
            .checks
            .iter()
            .filter(|c| c.name != "invertible")
            .map(|c| c.margin)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// First level with a failing row.
    pub fn first_failing_n(&self) -> Option<usize> {
        self.table.rows.iter().find(|r| !r.pass).map(|r| r.n)
    }
}

/// `err(n) = ‖J_n(T_n+A_n)^{-1}P_n f − (T+A)^{-1}f‖` for `n = 1..m`, with the
/// rate bounds and the uniform resolvent bound.
pub fn oracle_resolvent_convergence(inst: &OracleInstance, f: &CVec) -> Result<OracleReport> {
    let m = inst.m;
    if f.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: f.len(),
        });
    }
    let w = dense_solve(&(&inst.t + &inst.a), f)
        .ok_or_else(|| Error::InvalidInstance(format!("T + A singular (seed {})", inst.seed)))?;
    let w_d = inst.graph_norm(&w);
    let (c, d) = (inst.measured_c(), inst.measured_d());
    let uniform = (1.0 + c * c + d * d).sqrt() / c;

    struct Level {
        err_h: f64,
        err_graph: f64,
        defect: Defect,
        resolvent: f64,
        invertible: bool,
        embedding: f64,
    }
    let levels: Vec<Level> = (1..=m)
        .map(|n| {
            let q = inst.q(n);
            let (tn, an) = inst.compress(n);
            let kn = &tn + &an;
            let lu = kn.clone().lu();
            let inv = lu.try_inverse();
            let invertible = inv.is_some();
            let (err_h, err_graph, resolvent) = match &inv {
                Some(r) => {
                    let x = r * (q.adjoint() * f);
                    let e = &q * x - &w;
                    let mut stacked = CMat::zeros(2 * n, n);
                    stacked.rows_mut(0, n).copy_from(r);
                    stacked.rows_mut(n, n).copy_from(&(&an * r));
                    (e.norm(), inst.graph_norm(&e), op_norm(&stacked))
                }
                None => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
            };
            Level {
                err_h,
                err_graph,
                defect: inst.defect(n, &w),
                resolvent,
                invertible,
                embedding: inst.embedding_norm(n),
            }
        })
        .collect();

    let sup_j = levels.iter().map(|l| l.embedding).fold(0.0, f64::max);
    let norm_w = if w_d > 0.0 { w_d } else { 1.0 };
    let slack = |bound: f64| bound * (1.0 + REL_SLACK) + ABS_SLACK * norm_w.max(f.norm());
    let rows: Vec<ConvergenceRow> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let bound_graph = (sup_j * uniform + 1.0) * l.defect.g();
            let bound_h = (1.0 / c + 1.0) * l.defect.h();
            let pass = l.invertible
                && l.err_graph <= slack(bound_graph)
                && l.err_h <= slack(bound_h)
                && l.resolvent <= uniform * (1.0 + REL_SLACK);
            ConvergenceRow {
                n: i + 1,
                err_h: l.err_h,
                err_graph: l.err_graph,
                g_n: l.defect.g() / norm_w,
                h_n: l.defect.h() / norm_w,
                bound_graph,
                bound_h,
                pass,
                tail_bound: None,
                resolvent_norm: Some(l.resolvent),
            }
        })
        .collect();

    let all_invertible = levels.iter().all(|l| l.invertible);
    let last = rows.last().expect("m >= 1");
    let checks = vec![
        Check::new("invertible", if all_invertible { 0.0 } else { f64::INFINITY }),
        Check::all_le(
            "uniform_resolvent_bound",
            rows.iter()
                .map(|r| (r.resolvent_norm.unwrap(), uniform * (1.0 + REL_SLACK))),
        ),
        Check::all_le("rate_graph", rows.iter().map(|r| (r.err_graph, slack(r.bound_graph)))),
        Check::all_le("rate_h", rows.iter().map(|r| (r.err_h, slack(r.bound_h)))),
        Check::all_le("full_space_exact", [(last.err_graph, 1e-10 * norm_w.max(1.0))]),
    ];
    let table = ConvergenceTable {
        kind: TableKind::Oracle,
        seed: Some(inst.seed),
        descriptor: json!({
            "m": m,
            "c": inst.c,
            "d": inst.d,
            "c_measured": c,
            "d_measured": d,
            "uniform_bound": uniform,
            "sup_embedding_norm": sup_j,
            "solution_graph_norm": w_d,
        }),
        rows,
        checks,
    };
    Ok(OracleReport {
        seed: inst.seed,
        m,
        c_measured: c,
        d_measured: d,
        uniform_bound: uniform,
        sup_embedding_norm: sup_j,
        solution_graph_norm: w_d,
        all_invertible,
        table,
    })
}
