use nalgebra::DVector;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure, Result};
use crate::linalg::SensingMatrix;

/// `s_ii` at or below this marks a coordinate as not identifiable from the row space.
pub const UNIDENTIFIABLE_VARIANCE: f64 = 1e-12;

/// The estimated subspace Ŝ_μ: coordinates whose z-statistic exceeds `z_{α/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    indices: Vec<usize>,
    alpha: f64,
    tau: DVector<f64>,
    threshold: f64,
    noise_scale: f64,
    unidentifiable: Vec<usize>,
}

impl SupportSet {
    /// Zero-based coordinates in the support, strictly increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The statistics `τ_i`, one per coordinate.
    pub fn tau(&self) -> &DVector<f64> {
        &self.tau
    }

    /// Two-sided critical value `z_{α/2}`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Noise standard deviation the statistics were standardised by.
    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// Coordinates with `s_ii ≤` [`UNIDENTIFIABLE_VARIANCE`]; always excluded.
    pub fn unidentifiable(&self) -> &[usize] {
        &self.unidentifiable
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Upper `α/2` quantile of the standard normal.
pub(crate) fn two_sided_critical_value(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(1.0 - alpha / 2.0)
}

/// Per-coordinate tests of `H₀ᵢ: μᵢ = 0` from the unrestricted estimate.
///
/// `τ_i = |μ̂ᵢ| / (noise_scale · √s_ii)`; coordinate `i` enters the support
/// iff `τ_i > z_{α/2}`.
pub fn support_test(
    mu_un: &DVector<f64>,
    phi: &SensingMatrix,
    noise_scale: f64,
    alpha: f64,
) -> Result<SupportSet> {
    phi.check_signal(mu_un, "unrestricted estimate")?;
    ensure(alpha > 0.0 && alpha < 1.0, || {
        format!("alpha must lie in (0, 1), got {alpha}")
    })?;
    ensure(noise_scale > 0.0 && noise_scale.is_finite(), || {
        format!("noise scale must be positive, got {noise_scale}")
    })?;
    let threshold = two_sided_critical_value(alpha);
    let s = phi.s_diag();
    let mut unidentifiable = Vec::new();
    let tau = DVector::from_fn(mu_un.len(), |i, _| {
        if s[i] <= UNIDENTIFIABLE_VARIANCE {
            unidentifiable.push(i);
            0.0
        } else {
            mu_un[i].abs() / (noise_scale * s[i].sqrt())
        }
    });
    let indices = (0..tau.len()).filter(|&i| tau[i] > threshold).collect();
    Ok(SupportSet {
        indices,
        alpha,
        tau,
        threshold,
        noise_scale,
        unidentifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn critical_value_at_five_percent() {
        assert_abs_diff_eq!(two_sided_critical_value(0.05), 1.959964, epsilon = 5e-7);
    }

    #[test]
    fn zero_estimate_gives_empty_support() {
        let phi = crate::linalg::generate_sensing_matrix(10, 4, 3).unwrap();
        for alpha in [0.01, 0.05, 0.5, 0.99] {
            let set = support_test(&DVector::zeros(10), &phi, 1.0, alpha).unwrap();
            assert!(set.is_empty());
        }
    }

    #[test]
    fn identity_thresholds_coordinatewise() {
        let phi = SensingMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let mu = DVector::from_vec(vec![5.0, 0.1, 3.0]);
        let set = support_test(&mu, &phi, 1.0, 0.05).unwrap();
        assert_eq!(set.indices(), &[0, 2]);
        assert!(set.contains(2) && !set.contains(1));
    }

    #[test]
    fn unidentifiable_coordinates_are_flagged() {
        let phi = SensingMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        let mu = DVector::from_vec(vec![4.0, 9.0]);
        let set = support_test(&mu, &phi, 1.0, 0.05).unwrap();
        assert_eq!(set.indices(), &[0]);
        assert_eq!(set.unidentifiable(), &[1]);
        assert_eq!(set.tau()[1], 0.0);
    }

    #[test]
    fn alpha_must_be_a_probability() {
        let phi = SensingMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let mu = DVector::zeros(2);
        for alpha in [0.0, 1.0, -0.1, 1.5] {
            assert!(support_test(&mu, &phi, 1.0, alpha).is_err());
        }
    }
}
