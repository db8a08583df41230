use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SVD};

use crate::error::{ensure, Error, Result};

/// Largest max-norm recomposition error, relative to the input, accepted
/// from the bidiagonal SVD before switching to the eigen route.
const RECOMPOSITION_TOL: f64 = 1e-9;

/// Singular values at or below this are zero: `max(rows, cols) · σ_max · ε`.
pub fn default_threshold(rows: usize, cols: usize, largest_singular_value: f64) -> f64 {
    rows.max(cols) as f64 * largest_singular_value * f64::EPSILON
}

/// Thin factorisation `M = U·diag(s)·V'` with `s ≥ 0`.
#[derive(Debug, Clone)]
pub(crate) struct Decomposition {
    u: DMatrix<f64>,
    pub(crate) singular_values: DVector<f64>,
    v: DMatrix<f64>,
}

impl Decomposition {
    pub(crate) fn largest(&self) -> f64 {
        self.singular_values.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// `V·diag(1/s)·U'` over the singular values above `threshold`.
    pub(crate) fn pseudo_inverse(&self, threshold: f64) -> DMatrix<f64> {
        let mut v = self.v.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            let scale = if s > threshold { 1.0 / s } else { 0.0 };
            v.column_mut(j).scale_mut(scale);
        }
        v * self.u.transpose()
    }
}

/// Singular value decomposition that stays correct on rank-deficient and
/// repeated-spectrum inputs.
///
/// Symmetric matrices go through the symmetric eigensolver. Others use the
/// bidiagonal SVD, whose output is verified by recomposition; the bidiagonal
/// iteration can return a wrong factorisation for degenerate spectra, and in
/// that case the factors are rebuilt from the eigendecomposition of the
/// smaller Gram matrix. That fallback resolves singular values only down to
/// about `√ε · σ_max`.
pub(crate) fn decompose(m: &DMatrix<f64>) -> Result<Decomposition> {
    let scale = m.amax();
    if scale == 0.0 || m.is_empty() {
        let k = m.nrows().min(m.ncols());
        return Ok(Decomposition {
            u: DMatrix::zeros(m.nrows(), k),
            singular_values: DVector::zeros(k),
            v: DMatrix::zeros(m.ncols(), k),
        });
    }
    if m.is_square() && (m - m.transpose()).amax() <= 1e-14 * scale {
        return Ok(symmetric_decomposition(m));
    }
    let cap = 1_000 + 100 * m.nrows().max(m.ncols());
    if let Some(svd) = SVD::try_new(m.clone(), true, true, 5.0 * f64::EPSILON, cap) {
        let SVD {
            u,
            v_t,
            singular_values,
        } = svd;
        if let (Some(u), Some(v_t)) = (u, v_t) {
            let d = Decomposition {
                u,
                singular_values,
                v: v_t.transpose(),
            };
            let recomposed = &d.u * DMatrix::from_diagonal(&d.singular_values) * d.v.transpose();
            if (recomposed - m).amax() <= RECOMPOSITION_TOL * scale {
                return Ok(d);
            }
        }
    }
    gram_decomposition(m)
}

fn symmetric_decomposition(m: &DMatrix<f64>) -> Decomposition {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut u = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l < 0.0 {
            u.column_mut(j).neg_mut();
        }
    }
    Decomposition {
        u,
        singular_values: eig.eigenvalues.map(f64::abs),
        v: eig.eigenvectors,
    }
}

fn gram_decomposition(m: &DMatrix<f64>) -> Result<Decomposition> {
    let wide = m.nrows() <= m.ncols();
    let (left, other) = if wide {
        (m * m.transpose(), m.transpose())
    } else {
        (m.transpose() * m, m.clone())
    };
    let eig = left.symmetric_eigen();
    let s = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    // columns of the other factor: M'q / s (or Mq / s)
    let mut partner = &other * &eig.eigenvectors;
    for (j, &sj) in s.iter().enumerate() {
        if sj > 0.0 {
            partner.column_mut(j).unscale_mut(sj);
        } else {
            partner.column_mut(j).fill(0.0);
        }
    }
    let d = if wide {
        Decomposition {
            u: eig.eigenvectors,
            singular_values: s,
            v: partner,
        }
    } else {
        Decomposition {
            u: partner,
            singular_values: s,
            v: eig.eigenvectors,
        }
    };
    if d.singular_values.iter().all(|v| v.is_finite()) {
        Ok(d)
    } else {
        Err(Error::numerical("singular value decomposition failed"))
    }
}

/// Singular values of `m`, in no particular order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    ensure(m.iter().all(|v| v.is_finite()), || {
        "singular values of a matrix with non-finite entries".into()
    })?;
    Ok(decompose(m)?.singular_values)
}

/// Moore–Penrose pseudoinverse via SVD.
///
/// Singular values `≤ tol` are treated as zero; `tol = 0` selects
/// [`default_threshold`].
pub fn pseudoinverse(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    ensure(tol >= 0.0 && tol.is_finite(), || {
        format!("pseudoinverse tolerance must be nonnegative, got {tol}")
    })?;
    ensure(m.iter().all(|v| v.is_finite()), || {
        "pseudoinverse of a matrix with non-finite entries".into()
    })?;
    if m.is_empty() {
        return Ok(DMatrix::zeros(m.ncols(), m.nrows()));
    }
    let d = decompose(m)?;
    let threshold = if tol == 0.0 {
        default_threshold(m.nrows(), m.ncols(), d.largest())
    } else {
        tol
    };
    Ok(d.pseudo_inverse(threshold))
}

/// Cholesky factor of `V = φφ'`, rejecting numerically singular `V`.
pub(crate) fn gram_cholesky(phi: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let v = phi * phi.transpose();
    let scale = v.diagonal().amax();
    let chol = v
        .cholesky()
        .ok_or_else(|| Error::numerical("V = φφ' is singular"))?;
    let l = chol.l_dirty();
    let smallest = l
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let floor = phi.nrows().max(phi.ncols()) as f64 * f64::EPSILON * scale;
    // also catches a NaN pivot
    if smallest.is_nan() || smallest * smallest <= floor {
        return Err(Error::numerical("V = φφ' is singular"));
    }
    Ok(chol)
}

/// The recovery operator `P = (φ'V⁻¹φ)⁺ φ'V⁻¹` with `V = φφ'`, and the
/// diagonal of `PVP'`.
///
/// `P` is evaluated from the formula itself. For full row rank φ it coincides
/// with φ⁺, which the test suite checks rather than assumes.
pub fn recovery_operator(phi: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let gram = gram_cholesky(phi)?;
    recovery_operator_with(phi, &gram)
}

pub(super) fn recovery_operator_with(
    phi: &DMatrix<f64>,
    gram: &Cholesky<f64, Dyn>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    // V⁻¹φ, so that φ'V⁻¹ = (V⁻¹φ)'.
    let v_inv_phi = gram.solve(phi);
    let mut core = phi.transpose() * &v_inv_phi;
    core = (&core + core.transpose()) * 0.5;
    // φ'V⁻¹φ is an orthogonal projector, so its singular values are 0 or 1.
    let core_pinv = pseudoinverse(&core, 0.5)?;
    let p = core_pinv * v_inv_phi.transpose();

    let v = phi * phi.transpose();
    let pv = &p * v;
    let s_diag = DVector::from_fn(p.nrows(), |i, _| pv.row(i).dot(&p.row(i)));
    Ok((p, s_diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn identity_is_its_own_pseudoinverse() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_abs_diff_eq!(pseudoinverse(&id, 0.0).unwrap(), id, epsilon = 1e-15);
    }

    #[test]
    fn single_equation_gives_minimum_norm_solution() {
        let row = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let p = pseudoinverse(&row, 0.0).unwrap();
        assert_eq!(p.shape(), (2, 1));
        assert_abs_diff_eq!(p[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(1, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_matrix_pseudoinverse_is_zero() {
        let z = DMatrix::<f64>::zeros(2, 3);
        assert_eq!(pseudoinverse(&z, 0.0).unwrap(), DMatrix::zeros(3, 2));
    }

    #[test]
    fn rank_deficient_square_matrix() {
        // rank one: pinv = a a' / |a|^4
        let a = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let m = &a * a.transpose();
        let expected = &m / 81.0;
        assert_abs_diff_eq!(pseudoinverse(&m, 0.0).unwrap(), expected, epsilon = 1e-13);
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(pseudoinverse(&id, -1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn recovery_operator_identity_and_axis() {
        let (p, s) = recovery_operator(&DMatrix::identity(4, 4)).unwrap();
        assert!(max_abs(&(p - DMatrix::<f64>::identity(4, 4))) < 1e-12);
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let (p, s) = recovery_operator(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(
            p,
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn recovery_operator_rejects_singular_gram() {
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(recovery_operator(&phi), Err(Error::Numerical(_))));
    }

    #[test]
    fn degenerate_spectra_recompose() {
        // rotated projectors have repeated singular values 1 and 0
        let a = DMatrix::from_fn(6, 2, |i, j| ((i + 2 * j) as f64).sin() + j as f64);
        let q = a.qr().q();
        let proj = &q * q.transpose();
        let p = pseudoinverse(&proj, 0.0).unwrap();
        assert!(max_abs(&(p - &proj)) < 1e-12);

        let wide = q.transpose() * DMatrix::from_fn(6, 7, |i, j| ((i * 7 + j) as f64).cos());
        let d = gram_decomposition(&wide).unwrap();
        let back = &d.u * DMatrix::from_diagonal(&d.singular_values) * d.v.transpose();
        assert!(max_abs(&(back - &wide)) < 1e-10);
    }
}
