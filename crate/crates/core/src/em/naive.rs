use std::cmp::Ordering;

use itertools::Itertools;
use nalgebra::DVector;

use super::{q_value, run_em, ConditionalMoments, ConvergenceOptions, EmResult};
use crate::combinatorics::binomial;
use crate::error::{ensure, Error, Result};
use crate::linalg::SensingMatrix;

/// Largest `n choose k` for which the exhaustive-subspace EM will run.
pub const NAIVE_SUPPORT_BUDGET: u128 = 1_000_000;

/// How the naive M-step finds the best support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MStep {
    /// Keep the `k` largest-magnitude conditional-mean coordinates. Q separates
    /// across coordinates, so this attains the enumeration optimum.
    #[default]
    TopK,
    /// Visit every support of size at most `k` and compare Q directly.
    Enumerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NaiveOptions {
    pub convergence: ConvergenceOptions,
    pub m_step: MStep,
}

/// Outcome of one naive M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveStep {
    pub support: Vec<usize>,
    pub estimate: DVector<f64>,
    pub q: f64,
}

/// Maximises Q over all means with at most `k` nonzero coordinates.
///
/// Ties in Q are broken towards the lexicographically smallest support.
pub fn naive_m_step(cm: &ConditionalMoments, k: usize, strategy: MStep) -> Result<NaiveStep> {
    let n = cm.mean.len();
    ensure(k >= 1 && k <= n, || {
        format!("sparsity bound k = {k} must lie in 1..={n}")
    })?;
    match strategy {
        MStep::TopK => {
            let support = top_k(&cm.mean, k);
            let estimate = restrict(&cm.mean, &support);
            let q = q_value(&estimate, cm)?;
            Ok(NaiveStep {
                support,
                estimate,
                q,
            })
        }
        MStep::Enumerate => {
            let mut best: Option<NaiveStep> = None;
            for size in 0..=k {
                for support in (0..n).combinations(size) {
                    let estimate = restrict(&cm.mean, &support);
                    let q = q_value(&estimate, cm)?;
                    let better = match &best {
                        None => true,
                        Some(b) => q > b.q || (q == b.q && support < b.support),
                    };
                    if better {
                        best = Some(NaiveStep {
                            support,
                            estimate,
                            q,
                        });
                    }
                }
            }
            Ok(best.expect("at least the empty support is visited"))
        }
    }
}

/// Indices of the `k` largest-magnitude entries (lower index wins ties), ascending.
fn top_k(v: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut support = order[..k].to_vec();
    support.sort_unstable();
    support
}

/// The naive exhaustive-subspace EM: each M-step maximises Q over every
/// support of size at most `k` and keeps the best one.
///
/// An initial value with more than `k` nonzero entries is first cut down to
/// its `k` largest-magnitude coordinates, so that iteration starts inside the
/// k-sparse model.
pub fn naive_em(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    sigma: f64,
    k: usize,
    init: &DVector<f64>,
    opts: &NaiveOptions,
) -> Result<EmResult> {
    let n = phi.cols();
    ensure(k >= 1 && k <= n, || {
        format!("sparsity bound k = {k} must lie in 1..={n}")
    })?;
    let count = binomial(n, k);
    if count > NAIVE_SUPPORT_BUDGET {
        return Err(Error::Budget {
            count,
            budget: NAIVE_SUPPORT_BUDGET,
            hint: "use the new approach (recover_new_approach) instead",
        });
    }
    phi.check_signal(init, "initial estimate")?;
    let start = restrict(init, &top_k(init, k));
    run_em(phi, y, sigma, start, &opts.convergence, |cm| {
        naive_m_step(cm, k, opts.m_step).map(|step| step.estimate)
    })
}

pub(crate) fn restrict(v: &DVector<f64>, support: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for &i in support {
        out[i] = v[i];
    }
    out
}
