use nalgebra::DVector;

use super::naive::restrict;
use super::{
    check_sigma, run_em, support_test, unrestricted_em, ConvergenceOptions, EmResult, EmWarning,
};
use crate::error::{ensure, Result};
use crate::linalg::SensingMatrix;

/// Noise scale used to standardise the support-test statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestScale {
    /// `τ_i = |μ̂ᵢ| / √s_ii`, with `s_ii` the diagonal of `PVP'` and no σ factor.
    #[default]
    Unit,
    /// `τ_i = |μ̂ᵢ| / (σ√s_ii)`, exactly standard normal under `μ = 0`.
    Sigma,
}

impl TestScale {
    pub fn value(self, sigma: f64) -> f64 {
        match self {
            TestScale::Unit => 1.0,
            TestScale::Sigma => sigma,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestScale::Unit => "unit",
            TestScale::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    pub convergence: ConvergenceOptions,
    pub test_scale: TestScale,
}

/// EM whose M-step maximises Q over means supported on `support`
/// (zero-based, strictly increasing).
///
/// The initial value is projected onto the support before the first E-step.
/// An empty support yields the zero vector, flagged with
/// [`EmWarning::EmptySupport`].
pub fn restricted_em(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    sigma: f64,
    support: &[usize],
    init: &DVector<f64>,
    opts: &ConvergenceOptions,
) -> Result<EmResult> {
    let n = phi.cols();
    phi.check_signal(init, "initial estimate")?;
    phi.check_measurement(y)?;
    check_sigma(sigma)?;
    ensure(support.iter().all(|&i| i < n), || {
        format!("support index out of range for n = {n}")
    })?;
    ensure(support.windows(2).all(|w| w[0] < w[1]), || {
        "support indices must be strictly increasing".into()
    })?;

    if support.is_empty() {
        let zero = DVector::zeros(n);
        let ll = super::observed_loglik(phi, y, &zero, sigma)?;
        return Ok(EmResult {
            estimate: zero,
            iterations: 0,
            converged: true,
            loglik_trajectory: vec![ll],
            support_used: None,
            warnings: vec![EmWarning::EmptySupport],
        });
    }

    let start = restrict(init, support);
    run_em(phi, y, sigma, start, opts, |cm| {
        Ok(restrict(&cm.mean, support))
    })
}

/// Unrestricted EM from zero, z-tests on its estimate, then restricted EM on
/// the estimated support.
pub fn recover_new_approach(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    sigma: f64,
    alpha: f64,
    opts: &PipelineOptions,
) -> Result<EmResult> {
    check_sigma(sigma)?;
    let n = phi.cols();
    let zero = DVector::zeros(n);
    let unrestricted = unrestricted_em(phi, y, &zero, &opts.convergence)?;
    let support = support_test(
        &unrestricted.estimate,
        phi,
        opts.test_scale.value(sigma),
        alpha,
    )?;
    let mut result = restricted_em(phi, y, sigma, support.indices(), &zero, &opts.convergence)?;
    if !support.unidentifiable().is_empty() {
        result
            .warnings
            .push(EmWarning::Unidentifiable(support.unidentifiable().to_vec()));
    }
    result.support_used = Some(support);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    use crate::linalg::generate_sensing_matrix;

    #[test]
    fn full_support_matches_unrestricted() {
        let phi = generate_sensing_matrix(16, 7, 4).unwrap();
        let y = DVector::from_fn(7, |i, _| 2.0 - i as f64);
        let init = DVector::from_fn(16, |i, _| 0.3 * i as f64);
        let all: Vec<usize> = (0..16).collect();
        let opts = ConvergenceOptions::default();
        let a = restricted_em(&phi, &y, 1.0, &all, &init, &opts).unwrap();
        let b = unrestricted_em(&phi, &y, &init, &opts).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_abs_diff_eq!(a.estimate, b.estimate, epsilon = 1e-10);
    }

    #[test]
    fn empty_support_is_zero_with_warning() {
        let phi = generate_sensing_matrix(6, 3, 4).unwrap();
        let y = DVector::from_element(3, 1.0);
        let res = restricted_em(
            &phi,
            &y,
            1.0,
            &[],
            &DVector::from_element(6, 2.0),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(res.estimate, DVector::zeros(6));
        assert!(res.converged);
        assert_eq!(res.warnings, vec![EmWarning::EmptySupport]);
    }

    #[test]
    fn true_support_recovers_noiseless_mean() {
        let phi = generate_sensing_matrix(40, 20, 12).unwrap();
        let mut mu = DVector::zeros(40);
        for (i, v) in [(1, 5.0), (7, -3.0), (30, 2.5)] {
            mu[i] = v;
        }
        let y = phi.phi() * &mu;
        let opts = ConvergenceOptions {
            tol: 1e-12,
            max_iter: 10_000,
        };
        let res = restricted_em(&phi, &y, 0.1, &[1, 7, 30], &DVector::zeros(40), &opts).unwrap();
        assert!(res.converged);
        assert_abs_diff_eq!(res.estimate, mu, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_supports() {
        let phi = generate_sensing_matrix(6, 3, 4).unwrap();
        let y = DVector::zeros(3);
        let z = DVector::zeros(6);
        let opts = ConvergenceOptions::default();
        assert!(restricted_em(&phi, &y, 1.0, &[6], &z, &opts).is_err());
        assert!(restricted_em(&phi, &y, 1.0, &[2, 1], &z, &opts).is_err());
        assert!(restricted_em(&phi, &y, 1.0, &[1, 1], &z, &opts).is_err());
    }

    #[test]
    fn zero_data_gives_zero_estimate() {
        let phi = generate_sensing_matrix(20, 10, 1).unwrap();
        let res = recover_new_approach(&phi, &DVector::zeros(10), 0.5, 0.05, &Default::default())
            .unwrap();
        assert_eq!(res.estimate, DVector::zeros(20));
        assert!(res.support_used.unwrap().is_empty());
    }

    #[test]
    fn identity_phi_reduces_to_thresholding() {
        let phi = SensingMatrix::new(DMatrix::identity(5, 5)).unwrap();
        let sigma = 0.01;
        let y = DVector::from_vec(vec![1.0, 0.015, -0.5, 0.03, -0.001]);
        let opts = PipelineOptions {
            test_scale: TestScale::Sigma,
            ..Default::default()
        };
        let res = recover_new_approach(&phi, &y, sigma, 0.05, &opts).unwrap();
        let z = super::super::support::two_sided_critical_value(0.05);
        let expected = DVector::from_fn(5, |i, _| if y[i].abs() / sigma > z { y[i] } else { 0.0 });
        assert_abs_diff_eq!(res.estimate, expected, epsilon = 1e-14);
    }
}
