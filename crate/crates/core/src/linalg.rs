//! Small dense complex linear algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// (B + B*)/2
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of a Hermitian matrix. Only the Hermitian part of
/// `h` is used, so slightly non-Hermitian rounding noise is harmless.
pub fn lambda_min_hermitian(h: &CMat) -> f64 {
    if h.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = hermitian_part(h);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn lambda_max_hermitian(h: &CMat) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let sym = hermitian_part(h);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Operator 2-norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Dense solve by LU with partial pivoting. `None` when the factor is singular.
pub fn dense_solve(k: &CMat, b: &CVec) -> Option<CVec> {
    k.clone().lu().solve(b)
}

/// Closed-form inverse of a 2x2 block applied to `b`.
pub fn solve_2x2(k: [[C64; 2]; 2], b: [C64; 2]) -> Option<[C64; 2]> {
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    let scale = k.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if det.norm() <= f64::EPSILON * scale * scale || !det.is_finite() {
        return None;
    }
    Some([
        (k[1][1] * b[0] - k[0][1] * b[1]) / det,
        (k[0][0] * b[1] - k[1][0] * b[0]) / det,
    ])
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn is_finite(v: &[C64]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Partition of `0..n` into independent index blocks: two indices share a
/// block iff they are connected through entries above `tol * max|entry|`
/// in any of the supplied matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockStructure {
    pub blocks: Vec<Vec<usize>>,
}

impl BlockStructure {
    pub fn detect(n: usize, mats: &[&CMat], tol: f64) -> Self {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for m in mats {
            assert_eq!(m.nrows(), n);
            assert_eq!(m.ncols(), n);
            let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let cut = tol * scale;
            for j in 0..n {
                for i in 0..n {
                    if i != j && m[(i, j)].norm() > cut {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            match roots.iter().position(|&x| x == r) {
                Some(pos) => blocks[pos].push(i),
                None => {
                    roots.push(r);
                    blocks.push(vec![i]);
                }
            }
        }
        Self { blocks }
    }

    pub fn dense(n: usize) -> Self {
        Self {
            blocks: if n == 0 { vec![] } else { vec![(0..n).collect()] },
        }
    }

    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }
}
