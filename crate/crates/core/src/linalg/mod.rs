//! Dense linear algebra for the measurement model `y = φx`.
//!
//! [`SensingMatrix`] owns the measurement operator together with every
//! decomposition the recovery algorithms need. All of them are computed at
//! construction, so a `SensingMatrix` is immutable and can be shared freely
//! across threads.

mod pinv;
mod rip;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{ensure, Error, Result};

pub use pinv::{default_threshold, pseudoinverse, recovery_operator, singular_values};
pub use rip::{rip_constant_estimate, RipEstimate, RipMode, RIP_BRUTE_FORCE_BUDGET};

/// Attempts made by [`generate_sensing_matrix`] before giving up on a full-rank draw.
const GENERATION_RETRIES: usize = 10;

/// An `m × n` measurement operator with full row rank and its cached decompositions.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    phi: DMatrix<f64>,
    pinv: DMatrix<f64>,
    p_operator: DMatrix<f64>,
    s_diag: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

impl SensingMatrix {
    /// Wraps `phi`, verifying full row rank and precomputing φ⁺, the recovery
    /// operator `P = (φ'V⁻¹φ)⁺φ'V⁻¹` and the diagonal of `PVP'`.
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        let (m, n) = phi.shape();
        ensure(m >= 1 && n >= 1, || {
            "sensing matrix must be non-empty".into()
        })?;
        ensure(m <= n, || "m must not exceed n".into())?;
        ensure(phi.iter().all(|v| v.is_finite()), || {
            "sensing matrix has non-finite entries".into()
        })?;

        let decomposition = pinv::decompose(&phi)?;
        let s = &decomposition.singular_values;
        let threshold = default_threshold(m, n, decomposition.largest());
        let rank = s.iter().filter(|&&v| v > threshold).count();
        if rank < m {
            return Err(Error::numerical(format!(
                "sensing matrix is rank deficient (rank {rank} < m = {m})"
            )));
        }
        let pinv = decomposition.pseudo_inverse(threshold);
        let gram = pinv::gram_cholesky(&phi)?;
        let (p_operator, s_diag) = pinv::recovery_operator_with(&phi, &gram)?;

        Ok(Self {
            phi,
            pinv,
            p_operator,
            s_diag,
            gram,
        })
    }

    /// Number of measurements `m`.
    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    /// Signal dimension `n`.
    pub fn cols(&self) -> usize {
        self.phi.ncols()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Moore–Penrose pseudoinverse φ⁺ (`n × m`).
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// The recovery operator `P` (`n × m`), computed from its defining formula.
    pub fn p_operator(&self) -> &DMatrix<f64> {
        &self.p_operator
    }

    /// Diagonal of `PVP'`; the variance of each unrestricted estimate coordinate
    /// at unit noise scale.
    pub fn s_diag(&self) -> &DVector<f64> {
        &self.s_diag
    }

    /// Solves `V z = r` with `V = φφ'`.
    pub fn solve_gram(&self, r: &DVector<f64>) -> DVector<f64> {
        self.gram.solve(r)
    }

    /// `y = φx`. Noise, if any, is already part of `x`.
    pub fn measure(&self, x: &Signal) -> Result<DVector<f64>> {
        self.apply(x.values())
    }

    pub(crate) fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        ensure(v.len() == self.cols(), || {
            format!(
                "dimension mismatch: vector has length {}, sensing matrix has {} columns",
                v.len(),
                self.cols()
            )
        })?;
        Ok(&self.phi * v)
    }

    pub(crate) fn check_measurement(&self, y: &DVector<f64>) -> Result<()> {
        ensure(y.len() == self.rows(), || {
            format!(
                "dimension mismatch: measurement has length {}, sensing matrix has {} rows",
                y.len(),
                self.rows()
            )
        })
    }

    pub(crate) fn check_signal(&self, v: &DVector<f64>, what: &str) -> Result<()> {
        ensure(v.len() == self.cols(), || {
            format!(
                "dimension mismatch: {what} has length {}, sensing matrix has {} columns",
                v.len(),
                self.cols()
            )
        })
    }
}

/// A finite real signal vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(DVector<f64>);

impl Signal {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        ensure(values.iter().all(|v| v.is_finite()), || {
            "signal has non-finite entries".into()
        })?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The sparse population mean μ, with at most `k` nonzero coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMean {
    values: DVector<f64>,
    support: Vec<usize>,
    k: usize,
}

impl SparseMean {
    /// The support is read off the nonzero entries of `values`.
    pub fn new(values: DVector<f64>, k: usize) -> Result<Self> {
        let n = values.len();
        ensure(n >= 1, || "mean vector must be non-empty".into())?;
        ensure(values.iter().all(|v| v.is_finite()), || {
            "mean vector has non-finite entries".into()
        })?;
        let support: Vec<usize> = (0..n).filter(|&i| values[i] != 0.0).collect();
        ensure(k >= 1 && k <= n, || {
            format!("sparsity bound k = {k} must lie in 1..={n}")
        })?;
        ensure(support.len() <= k, || {
            format!(
                "mean has {} nonzero entries, more than k = {k}",
                support.len()
            )
        })?;
        Ok(Self { values, support, k })
    }

    /// First `count` coordinates equal to `value`, the rest zero.
    pub fn leading(n: usize, count: usize, value: f64, k: usize) -> Result<Self> {
        ensure(count <= n, || {
            format!("cannot set {count} leading coordinates of a length-{n} mean")
        })?;
        let values = DVector::from_fn(n, |i, _| if i < count { value } else { 0.0 });
        Self::new(values, k)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Zero-based indices of the nonzero coordinates, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws an `m × n` matrix with i.i.d. `N(0, 1/m)` entries and full row rank.
pub fn generate_sensing_matrix(n: usize, m: usize, seed: u64) -> Result<SensingMatrix> {
    ensure(m >= 1 && n >= 1, || "m and n must be positive".into())?;
    ensure(m <= n, || "m must not exceed n".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("positive scale");
    let mut last = None;
    for _ in 0..GENERATION_RETRIES {
        let phi = DMatrix::from_fn(m, n, |_, _| entry.sample(&mut rng));
        match SensingMatrix::new(phi) {
            Ok(matrix) => return Ok(matrix),
            Err(Error::Numerical(msg)) => last = Some(msg),
            Err(other) => return Err(other),
        }
    }
    Err(Error::Generation(format!(
        "no full-rank {m}x{n} draw in {GENERATION_RETRIES} attempts ({})",
        last.unwrap_or_default()
    )))
}

/// `x = μ + σz` with `z` a standard normal vector.
pub fn sample_signal(mu: &SparseMean, sigma: f64, seed: u64) -> Result<Signal> {
    ensure(sigma > 0.0 && sigma.is_finite(), || {
        format!("sigma must be positive, got {sigma}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = DVector::from_fn(mu.len(), |i, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        mu.values[i] + sigma * z
    });
    Signal::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_matrix_inverts() {
        let phi = generate_sensing_matrix(1, 1, 3).unwrap();
        let v = phi.phi()[(0, 0)];
        assert!(v != 0.0);
        assert_abs_diff_eq!(phi.pinv()[(0, 0)], 1.0 / v, epsilon = 1e-14);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_sensing_matrix(4, 2, 42).unwrap();
        let b = generate_sensing_matrix(4, 2, 42).unwrap();
        assert_eq!(a.phi(), b.phi());
        let c = generate_sensing_matrix(4, 2, 43).unwrap();
        assert_ne!(a.phi(), c.phi());
    }

    #[test]
    fn m_above_n_is_rejected() {
        let err = generate_sensing_matrix(3, 4, 0).unwrap_err();
        assert!(matches!(err, Error::Contract(ref m) if m == "m must not exceed n"));
    }

    #[test]
    fn rank_deficient_phi_is_numerical_failure() {
        let phi = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(SensingMatrix::new(phi), Err(Error::Numerical(_))));
    }

    #[test]
    fn measure_examples() {
        let id = SensingMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let x = Signal::new(DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(id.measure(&x).unwrap().as_slice(), &[1.0, 2.0, 3.0]);

        let sum = SensingMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        let x = Signal::new(DVector::from_vec(vec![2.0, 3.0])).unwrap();
        assert_eq!(sum.measure(&x).unwrap().as_slice(), &[5.0]);

        let phi = SensingMatrix::new(DMatrix::from_row_slice(
            2,
            3,
            &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        ))
        .unwrap();
        let x = Signal::new(DVector::from_element(3, 1.0)).unwrap();
        assert_eq!(phi.measure(&x).unwrap().as_slice(), &[2.0, 1.0]);

        let short = Signal::new(DVector::from_element(2, 1.0)).unwrap();
        assert!(matches!(phi.measure(&short), Err(Error::Contract(_))));
    }

    #[test]
    fn signal_rejects_nan() {
        assert!(Signal::new(DVector::from_vec(vec![1.0, f64::NAN])).is_err());
    }

    #[test]
    fn sparse_mean_support_and_bounds() {
        let mu = SparseMean::leading(10, 4, 5.0, 4).unwrap();
        assert_eq!(mu.support(), &[0, 1, 2, 3]);
        assert!(SparseMean::leading(10, 4, 5.0, 3).is_err());
        assert!(SparseMean::leading(10, 4, 5.0, 11).is_err());
    }

    #[test]
    fn sample_signal_is_deterministic_and_checks_sigma() {
        let mu = SparseMean::leading(6, 2, 1.0, 2).unwrap();
        let a = sample_signal(&mu, 0.5, 9).unwrap();
        let b = sample_signal(&mu, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            sample_signal(&mu, 0.0, 9),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            sample_signal(&mu, -1.0, 9),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sample_signal_law_of_large_numbers() {
        let mu = SparseMean::leading(5, 2, 3.0, 2).unwrap();
        let sigma = 0.01;
        let draws = 10_000;
        let mut acc = DVector::zeros(5);
        for seed in 0..draws {
            acc += sample_signal(&mu, sigma, seed).unwrap().values();
        }
        acc /= draws as f64;
        for i in 0..5 {
            assert!((acc[i] - mu.values()[i]).abs() <= 4.0 * sigma / 100.0);
        }
    }

    #[test]
    fn sample_signal_variance_concentrates() {
        // Var of the sample variance of 10^4 standard normals is 2/(N-1); 0.06 is ~4.2 sd.
        let n = 10_000;
        let mu = SparseMean::new(DVector::zeros(n), 1).unwrap();
        let x = sample_signal(&mu, 1.0, 2024).unwrap();
        let v = x.values();
        let mean = v.mean();
        let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((0.94..=1.06).contains(&var), "sample variance {var}");
    }
}
