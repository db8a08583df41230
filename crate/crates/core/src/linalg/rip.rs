use std::collections::HashSet;

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::binomial;
use crate::error::{ensure, Error, Result};

/// Largest number of supports the brute-force estimator will enumerate.
pub const RIP_BRUTE_FORCE_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RipMode {
    /// Every size-`k` support, in lexicographic order.
    BruteForce,
    /// `samples` supports drawn uniformly at random (with replacement).
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RipEstimate {
    pub delta: f64,
    /// Supports evaluated, counting repeats.
    pub supports_checked: usize,
    pub distinct_supports: usize,
    pub total_supports: u128,
    /// True when some support was never evaluated, so `delta` only bounds δ_k from below.
    pub lower_bound: bool,
}

/// Restricted isometry constant δ_k: the largest deviation from 1 of any
/// eigenvalue of `A_S'A_S` over `|S| = k`.
pub fn rip_constant_estimate(phi: &DMatrix<f64>, k: usize, mode: RipMode) -> Result<RipEstimate> {
    let n = phi.ncols();
    ensure(k >= 1 && k <= n, || {
        format!("RIP order k = {k} must lie in 1..={n}")
    })?;
    let total = binomial(n, k);
    let gram = phi.transpose() * phi;

    match mode {
        RipMode::BruteForce => {
            if total > RIP_BRUTE_FORCE_BUDGET {
                return Err(Error::Budget {
                    count: total,
                    budget: RIP_BRUTE_FORCE_BUDGET,
                    hint: "use Monte-Carlo mode, which returns a lower bound",
                });
            }
            let mut delta = 0.0_f64;
            let mut checked = 0;
            for support in (0..n).combinations(k) {
                delta = delta.max(support_deviation(&gram, &support));
                checked += 1;
            }
            Ok(RipEstimate {
                delta,
                supports_checked: checked,
                distinct_supports: checked,
                total_supports: total,
                lower_bound: false,
            })
        }
        RipMode::MonteCarlo { samples, seed } => {
            ensure(samples >= 1, || {
                "Monte-Carlo mode needs at least one sample".into()
            })?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            let mut delta = 0.0_f64;
            for _ in 0..samples {
                let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
                support.sort_unstable();
                if seen.contains(&support) {
                    continue;
                }
                delta = delta.max(support_deviation(&gram, &support));
                seen.insert(support);
            }
            let distinct = seen.len();
            Ok(RipEstimate {
                delta,
                supports_checked: samples,
                distinct_supports: distinct,
                total_supports: total,
                lower_bound: (distinct as u128) < total,
            })
        }
    }
}

fn support_deviation(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    if k == 1 {
        let j = support[0];
        return (gram[(j, j)] - 1.0).abs();
    }
    let sub = DMatrix::from_fn(k, k, |a, b| gram[(support[a], support[b])]);
    let eig = sub.symmetric_eigenvalues();
    let lo = eig.min();
    let hi = eig.max();
    (1.0 - lo).max(hi - 1.0)
}
