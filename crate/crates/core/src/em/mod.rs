//! EM reconstruction of a sparse mean μ from compressed observations `y = φx`,
//! `x ~ N(μ, σ²I)`.
//!
//! The complete data is the unobserved signal `x`; the E-step uses the
//! Gaussian conditional law of `x` given `y`, and the M-steps differ only in
//! which subspace of means they maximise over:
//!
//! * [`naive_em`]: the union of all supports of size at most `k`;
//! * [`unrestricted_em`]: all of ℝⁿ;
//! * [`restricted_em`]: a single support, normally the one produced by
//!   [`support_test`] from the unrestricted estimate.
//!
//! [`recover_new_approach`] chains the last three.

mod naive;
mod restricted;
mod support;

use nalgebra::DVector;

use crate::error::{ensure, Result};
use crate::linalg::SensingMatrix;

pub use naive::{naive_em, naive_m_step, MStep, NaiveOptions, NaiveStep, NAIVE_SUPPORT_BUDGET};
pub use restricted::{recover_new_approach, restricted_em, PipelineOptions, TestScale};
pub use support::{support_test, SupportSet, UNIDENTIFIABLE_VARIANCE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// Stop once `‖μ⁽ᵗ⁺¹⁾ − μ⁽ᵗ⁾‖₂` falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmWarning {
    /// The estimated support was empty; the estimate is the zero vector.
    EmptySupport,
    /// Coordinates whose unrestricted estimate has (numerically) zero variance
    /// and were therefore kept out of the support.
    Unidentifiable(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub estimate: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Observed log-likelihood at the starting point and after every iteration.
    pub loglik_trajectory: Vec<f64>,
    pub support_used: Option<SupportSet>,
    pub warnings: Vec<EmWarning>,
}

/// Moments of `x | y, μ⁽ᵗ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    /// `μ⁽ᵗ⁾ + φ'(φφ')⁻¹(y − φμ⁽ᵗ⁾)`
    pub mean: DVector<f64>,
    /// Trace of `σ²(I − φ'(φφ')⁻¹φ)`.
    pub cov_trace: f64,
}

pub fn conditional_moments(
    phi: &SensingMatrix,
    mu_t: &DVector<f64>,
    y: &DVector<f64>,
    sigma: f64,
) -> Result<ConditionalMoments> {
    phi.check_signal(mu_t, "current estimate")?;
    phi.check_measurement(y)?;
    check_sigma(sigma)?;
    let residual = y - phi.phi() * mu_t;
    let mean = mu_t + phi.pinv() * residual;
    // the trace of the row-space projector φ⁺φ is the sum of s_ii
    let projector_trace = phi.s_diag().sum();
    let cov_trace = sigma * sigma * (phi.cols() as f64 - projector_trace);
    Ok(ConditionalMoments {
        mean,
        cov_trace: cov_trace.max(0.0),
    })
}

/// `Q(μ) = E[ℓ(μ) | y, μ⁽ᵗ⁾]` up to an additive constant:
/// `−½(‖E[x|y] − μ‖² + tr Cov[x|y])`.
pub fn q_value(mu: &DVector<f64>, cm: &ConditionalMoments) -> Result<f64> {
    ensure(mu.len() == cm.mean.len(), || {
        format!(
            "dimension mismatch: mean has length {}, moments have {}",
            mu.len(),
            cm.mean.len()
        )
    })?;
    Ok(-0.5 * ((&cm.mean - mu).norm_squared() + cm.cov_trace))
}

/// `−½(y − φμ)'(σ²φφ')⁻¹(y − φμ)`, dropping the normalising constant.
pub fn observed_loglik(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    mu: &DVector<f64>,
    sigma: f64,
) -> Result<f64> {
    phi.check_signal(mu, "mean")?;
    phi.check_measurement(y)?;
    check_sigma(sigma)?;
    let r = y - phi.phi() * mu;
    let weighted = phi.solve_gram(&r);
    Ok(-0.5 * r.dot(&weighted) / (sigma * sigma))
}

/// EM with an unconstrained M-step: `μ⁽ᵗ⁺¹⁾ = μ⁽ᵗ⁾ + φ⁺(y − φμ⁽ᵗ⁾)`.
///
/// The update is a projection, so the first step already lands on the fixed
/// point `(I − φ⁺φ)·init + φ⁺y`; from `init = 0` that is the least-norm
/// solution φ⁺y. The log-likelihood trajectory is recorded at unit noise scale.
pub fn unrestricted_em(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    init: &DVector<f64>,
    opts: &ConvergenceOptions,
) -> Result<EmResult> {
    run_em(phi, y, 1.0, init.clone(), opts, |cm| Ok(cm.mean.clone()))
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    ensure(sigma > 0.0 && sigma.is_finite(), || {
        format!("sigma must be positive, got {sigma}")
    })
}

/// Shared E/M loop. `m_step` maps the conditional moments to the next iterate.
pub(crate) fn run_em<F>(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    sigma: f64,
    init: DVector<f64>,
    opts: &ConvergenceOptions,
    mut m_step: F,
) -> Result<EmResult>
where
    F: FnMut(&ConditionalMoments) -> Result<DVector<f64>>,
{
    phi.check_signal(&init, "initial estimate")?;
    phi.check_measurement(y)?;
    check_sigma(sigma)?;
    ensure(opts.tol >= 0.0, || {
        "convergence tolerance must be nonnegative".into()
    })?;

    let mut mu = init;
    let mut trajectory = vec![observed_loglik(phi, y, &mu, sigma)?];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let cm = conditional_moments(phi, &mu, y, sigma)?;
        let next = m_step(&cm)?;
        let step = (&next - &mu).norm();
        mu = next;
        iterations += 1;
        trajectory.push(observed_loglik(phi, y, &mu, sigma)?);
        if step < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(EmResult {
        estimate: mu,
        iterations,
        converged,
        loglik_trajectory: trajectory,
        support_used: None,
        warnings: Vec::new(),
    })
}
