//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// One-sided (Hestenes) Jacobi SVD: returns `(U, s, V)` with `A = U diag(s) V'`.
///
/// Columns of a working copy of `A` are rotated pairwise until mutually
/// orthogonal; their norms are the singular values. Slow but independent of
/// the library's decompositions.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let transpose = a.nrows() < a.ncols();
    let mut w = if transpose { a.transpose() } else { a.clone() };
    let (rows, cols) = w.shape();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let s = DVector::from_fn(cols, |j, _| w.column(j).norm());
    let mut u = w;
    for j in 0..cols {
        if s[j] > 0.0 {
            u.column_mut(j).unscale_mut(s[j]);
        }
    }
    if transpose {
        (v, s, u)
    } else {
        (u, s, v)
    }
}

/// Pseudoinverse from [`jacobi_svd`] with the numerical-rank threshold
/// `max(rows, cols) · σ_max · ε`.
pub fn oracle_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, s, v) = jacobi_svd(a);
    let smax = s.iter().fold(0.0_f64, |m, &x| m.max(x));
    let thr = a.nrows().max(a.ncols()) as f64 * smax * f64::EPSILON;
    let inv = s.map(|x| if x > thr { 1.0 / x } else { 0.0 });
    v * DMatrix::from_diagonal(&inv) * u.transpose()
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

pub fn gaussian_vector(n: usize, scale: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    })
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Largest violation of the four Penrose conditions.
pub fn penrose_violation(a: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let axa = a * x * a;
    let xax = x * a * x;
    let ax = a * x;
    let xa = x * a;
    [
        max_abs(&(axa - a)),
        max_abs(&(xax - x)),
        max_abs(&(&ax - ax.transpose())),
        max_abs(&(&xa - xa.transpose())),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
