//! Seeded Monte-Carlo studies comparing the reconstruction methods.
//!
//! * [`run_init_study`]: sensitivity of the unrestricted EM limit to its
//!   starting point.
//! * [`run_comparison`]: conventional vs naive vs new approach over a σ grid.
//! * [`run_m_sweep`]: the new approach as the number of measurements varies.
//!
//! Each replication seeds its own RNG streams via [`derive_seed`], and work is
//! spread over the rayon pool; results are gathered in a fixed order, so
//! output bytes do not depend on the thread count.

mod output;
mod plot;
mod seed;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::combinatorics::binomial;
use crate::em::{
    naive_em, recover_new_approach, unrestricted_em, ConvergenceOptions, MStep, NaiveOptions,
    PipelineOptions, TestScale, NAIVE_SUPPORT_BUDGET,
};
use crate::error::{ensure, Error, Result};
use crate::l1::{default_lambda, recover_conventional, L1Options};
use crate::linalg::{generate_sensing_matrix, sample_signal, SensingMatrix, SparseMean};

pub use output::{
    format_sig9, sorted_comparison, write_comparison, write_comparison_csv, write_init_study,
    write_init_study_csv, write_m_sweep, write_m_sweep_csv, COMPARISON_HEADER, INIT_STUDY_HEADER,
    M_SWEEP_HEADER,
};
pub use plot::{emit_plot, render_svg, PlotAxis, PlotOptions};
pub use seed::derive_seed;
pub(crate) use seed::{
    EXP_INIT_STUDY, EXP_RECOVER, EXP_RIP, STREAM_CONVENTIONAL_DRAW, STREAM_EM_DRAW, STREAM_PHI,
};

use seed::{EXP_COMPARISON, EXP_M_SWEEP};

/// Entry value of the near-zero initializer every init study must include.
pub const NEAR_ZERO_INIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Conventional,
    Naive,
    New,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Conventional, Method::Naive, Method::New];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Conventional => "conventional",
            Method::Naive => "naive",
            Method::New => "new",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "conventional" => Ok(Method::Conventional),
            "naive" => Ok(Method::Naive),
            "new" => Ok(Method::New),
            other => Err(Error::contract(format!(
                "unknown method '{other}' (expected conventional, naive or new)"
            ))),
        }
    }
}

/// What a residual measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResidualType {
    /// `‖x − x̂‖₂`, averaged over the inner draws (conventional arm).
    Signal,
    /// `‖μ − μ̂‖₂` (EM arms).
    Mean,
    /// `‖μ − mean(x̂)‖₂` over the inner draws; supplementary conventional row.
    MeanOfReconstructions,
}

impl ResidualType {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualType::Signal => "x",
            ResidualType::Mean => "mu",
            ResidualType::MeanOfReconstructions => "mu_of_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    /// Support bound for the naive method.
    pub k: usize,
    pub mu: SparseMean,
    pub sigma_grid: Vec<f64>,
    pub outer_reps: usize,
    /// Fresh draws averaged per outer replication in the conventional arm.
    pub inner_reps: usize,
    pub alpha: f64,
    /// Penalty for the conventional arm; `σ√(2 ln n)` per grid point when absent.
    pub lambda: Option<f64>,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub test_scale: TestScale,
    /// Also emit the conventional arm's `‖μ − mean(x̂)‖` rows.
    pub supplementary: bool,
    pub em: ConvergenceOptions,
    pub l1: L1Options,
}

/// First four coordinates 5, the rest 0 (truncated when `n < 4`).
pub fn default_mean(n: usize) -> Result<SparseMean> {
    SparseMean::leading(n, n.min(4), 5.0, n)
}

impl ExperimentConfig {
    /// Defaults: `m = n/2`, `k = m`, μ from [`default_mean`], σ ∈ {0.1, …, 1.0},
    /// 10 outer × 1000 inner replications, α = 0.05.
    pub fn new(n: usize) -> Result<Self> {
        let m = (n / 2).max(1);
        Ok(Self {
            n,
            m,
            k: m,
            mu: default_mean(n)?,
            sigma_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            outer_reps: 10,
            inner_reps: 1000,
            alpha: 0.05,
            lambda: None,
            seed: 42,
            methods: Method::ALL.to_vec(),
            test_scale: TestScale::default(),
            supplementary: false,
            em: ConvergenceOptions::default(),
            l1: L1Options::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1 && self.m >= 1, || {
            "n and m must be positive".into()
        })?;
        ensure(self.m <= self.n, || "m must not exceed n".into())?;
        ensure(self.k >= 1 && self.k <= self.n, || {
            format!("k = {} must lie in 1..={}", self.k, self.n)
        })?;
        ensure(self.mu.len() == self.n, || {
            format!("mean has length {}, expected n = {}", self.mu.len(), self.n)
        })?;
        ensure(!self.sigma_grid.is_empty(), || {
            "sigma grid must be non-empty".into()
        })?;
        ensure(
            self.sigma_grid.iter().all(|&s| s > 0.0 && s.is_finite()),
            || "sigma grid values must be positive".into(),
        )?;
        ensure(self.outer_reps >= 1 && self.inner_reps >= 1, || {
            "replication counts must be positive".into()
        })?;
        ensure(self.alpha > 0.0 && self.alpha < 1.0, || {
            format!("alpha must lie in (0, 1), got {}", self.alpha)
        })?;
        if let Some(l) = self.lambda {
            ensure(l > 0.0 && l.is_finite(), || {
                format!("lambda must be positive, got {l}")
            })?;
        }
        ensure(!self.methods.is_empty(), || {
            "at least one method is required".into()
        })?;
        if self.methods.contains(&Method::Naive) {
            let count = binomial(self.n, self.k);
            if count > NAIVE_SUPPORT_BUDGET {
                return Err(Error::Budget {
                    count,
                    budget: NAIVE_SUPPORT_BUDGET,
                    hint: "drop the naive method and rely on the new approach for this (n, k)",
                });
            }
        }
        Ok(())
    }
}

/// Mean and standard error of one (method, σ or m) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub method: Method,
    pub residual_type: ResidualType,
    pub sigma: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub lambda: Option<f64>,
    pub alpha: f64,
    pub reps: usize,
    pub mean_residual: f64,
    /// Sample standard deviation over replications divided by `√reps`.
    pub se_residual: f64,
    pub seed: u64,
    /// Per-replication residuals, in replication order.
    pub replicates: Vec<f64>,
    /// Replications whose estimated support equalled the true support exactly
    /// (new approach only).
    pub exact_support: Option<usize>,
}

/// `(mean, standard error)`; the standard error of a single value is 0.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    if r == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (r as f64 - 1.0)).sqrt();
    (mean, sd / (r as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitStudyRow {
    pub label: String,
    pub l1_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One unrestricted-EM run per initializer on a single shared `(φ, y)` draw,
/// sorted by the L1 norm of the limit.
pub fn run_init_study(
    phi: &SensingMatrix,
    mu: &SparseMean,
    sigma: f64,
    inits: &[(String, DVector<f64>)],
    seed: u64,
    opts: &ConvergenceOptions,
) -> Result<Vec<InitStudyRow>> {
    ensure(!inits.is_empty(), || {
        "at least one initializer is required".into()
    })?;
    ensure(
        inits
            .iter()
            .any(|(_, v)| v.iter().all(|x| (x - NEAR_ZERO_INIT).abs() <= 1e-12)),
        || format!("initializers must include the near-zero start ({NEAR_ZERO_INIT}, …)"),
    )?;
    ensure(mu.len() == phi.cols(), || {
        format!("mean has length {}, expected {}", mu.len(), phi.cols())
    })?;
    let x = sample_signal(
        mu,
        sigma,
        derive_seed(seed, &[EXP_INIT_STUDY, STREAM_EM_DRAW]),
    )?;
    let y = phi.measure(&x)?;
    let mut rows = inits
        .iter()
        .map(|(label, init)| {
            let res = unrestricted_em(phi, &y, init, opts)?;
            Ok(InitStudyRow {
                label: label.clone(),
                l1_norm: res.estimate.lp_norm(1),
                iterations: res.iterations,
                converged: res.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.l1_norm.total_cmp(&b.l1_norm));
    Ok(rows)
}

/// Residuals of one outer replication at one σ.
#[derive(Debug, Default)]
struct CellOutcome {
    conventional: Option<(f64, f64)>,
    naive: Option<f64>,
    new: Option<(f64, bool)>,
}

fn sensing_for_rep(n: usize, m: usize, seed: u64, path: &[u64]) -> Result<SensingMatrix> {
    generate_sensing_matrix(n, m, derive_seed(seed, path))
}

/// Three-way comparison over `config.sigma_grid`.
///
/// Outer replication `r` uses its own sensing matrix (shared by every σ and
/// method). Conventional: `inner_reps` fresh draws, residual `‖x − x̂‖₂`
/// averaged. Naive/new: one draw, residual `‖μ − μ̂‖₂`.
pub fn run_comparison(config: &ExperimentConfig) -> Result<Vec<ResidualStats>> {
    config.validate()?;
    let c = config;
    let phis = (0..c.outer_reps)
        .into_par_iter()
        .map(|r| sensing_for_rep(c.n, c.m, c.seed, &[EXP_COMPARISON, STREAM_PHI, r as u64]))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..c.sigma_grid.len())
        .flat_map(|s| (0..c.outer_reps).map(move |r| (s, r)))
        .collect();
    let outcomes = cells
        .par_iter()
        .map(|&(s, r)| comparison_cell(c, &phis[r], c.sigma_grid[s], r))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (s, &sigma) in c.sigma_grid.iter().enumerate() {
        let per_rep = &outcomes[s * c.outer_reps..(s + 1) * c.outer_reps];
        let lambda = c.lambda.unwrap_or_else(|| default_lambda(sigma, c.n));
        let row = |method, residual_type, lambda, values: Vec<f64>, exact| {
            let (mean, se) = mean_and_se(&values);
            ResidualStats {
                method,
                residual_type,
                sigma,
                n: c.n,
                m: c.m,
                k: c.k,
                lambda,
                alpha: c.alpha,
                reps: values.len(),
                mean_residual: mean,
                se_residual: se,
                seed: c.seed,
                replicates: values,
                exact_support: exact,
            }
        };
        for method in Method::ALL {
            if !c.methods.contains(&method) {
                continue;
            }
            match method {
                Method::Conventional => {
                    let x_res = per_rep.iter().map(|o| o.conventional.unwrap().0).collect();
                    rows.push(row(method, ResidualType::Signal, Some(lambda), x_res, None));
                    if c.supplementary {
                        let mu_res = per_rep.iter().map(|o| o.conventional.unwrap().1).collect();
                        rows.push(row(
                            method,
                            ResidualType::MeanOfReconstructions,
                            Some(lambda),
                            mu_res,
                            None,
                        ));
                    }
                }
                Method::Naive => {
                    let v = per_rep.iter().map(|o| o.naive.unwrap()).collect();
                    rows.push(row(method, ResidualType::Mean, None, v, None));
                }
                Method::New => {
                    let v = per_rep.iter().map(|o| o.new.unwrap().0).collect();
                    let hits = per_rep.iter().filter(|o| o.new.unwrap().1).count();
                    rows.push(row(method, ResidualType::Mean, None, v, Some(hits)));
                }
            }
        }
    }
    Ok(rows)
}

fn comparison_cell(
    c: &ExperimentConfig,
    phi: &SensingMatrix,
    sigma: f64,
    r: usize,
) -> Result<CellOutcome> {
    let mut out = CellOutcome::default();
    let mu = c.mu.values();
    let sigma_key = sigma.to_bits();

    if c.methods.contains(&Method::Conventional) {
        let lambda = c.lambda.unwrap_or_else(|| default_lambda(sigma, c.n));
        let mut total = 0.0;
        let mut mean_recon = DVector::zeros(c.n);
        for j in 0..c.inner_reps {
            let path = [
                EXP_COMPARISON,
                STREAM_CONVENTIONAL_DRAW,
                sigma_key,
                r as u64,
                j as u64,
            ];
            let x = sample_signal(&c.mu, sigma, derive_seed(c.seed, &path))?;
            let y = phi.measure(&x)?;
            let sol = recover_conventional(phi, &y, lambda, None, &c.l1)?;
            total += (x.values() - &sol.x_hat).norm();
            mean_recon += &sol.x_hat;
        }
        mean_recon /= c.inner_reps as f64;
        out.conventional = Some((total / c.inner_reps as f64, (mu - mean_recon).norm()));
    }

    let wants_em = c.methods.contains(&Method::Naive) || c.methods.contains(&Method::New);
    if wants_em {
        let path = [EXP_COMPARISON, STREAM_EM_DRAW, sigma_key, r as u64];
        let x = sample_signal(&c.mu, sigma, derive_seed(c.seed, &path))?;
        let y = phi.measure(&x)?;
        let zero = DVector::zeros(c.n);
        if c.methods.contains(&Method::Naive) {
            let opts = NaiveOptions {
                convergence: c.em,
                m_step: MStep::TopK,
            };
            let res = naive_em(phi, &y, sigma, c.k, &zero, &opts)?;
            out.naive = Some((mu - res.estimate).norm());
        }
        if c.methods.contains(&Method::New) {
            let opts = PipelineOptions {
                convergence: c.em,
                test_scale: c.test_scale,
            };
            let res = recover_new_approach(phi, &y, sigma, c.alpha, &opts)?;
            let exact = res
                .support_used
                .as_ref()
                .is_some_and(|s| s.indices() == c.mu.support());
            out.new = Some(((mu - res.estimate).norm(), exact));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MSweepConfig {
    pub n: usize,
    pub sigma: f64,
    pub m_grid: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub mu: SparseMean,
    pub seed: u64,
    pub test_scale: TestScale,
    pub em: ConvergenceOptions,
}

impl MSweepConfig {
    /// `n = 1000`, σ = 0.001, `m ∈ {100, 300, 500}`, 10 replications.
    pub fn new(n: usize, sigma: f64, m_grid: Vec<usize>) -> Result<Self> {
        Ok(Self {
            n,
            sigma,
            m_grid,
            reps: 10,
            alpha: 0.05,
            mu: default_mean(n)?,
            seed: 42,
            test_scale: TestScale::default(),
            em: ConvergenceOptions::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1, || "n must be positive".into())?;
        ensure(!self.m_grid.is_empty(), || {
            "m grid must be non-empty".into()
        })?;
        ensure(self.m_grid.iter().all(|&m| m >= 1), || {
            "m values must be positive".into()
        })?;
        ensure(self.m_grid.iter().all(|&m| m <= self.n), || {
            "m must not exceed n".into()
        })?;
        ensure(self.sigma > 0.0 && self.sigma.is_finite(), || {
            format!("sigma must be positive, got {}", self.sigma)
        })?;
        ensure(self.reps >= 1, || {
            "replication count must be positive".into()
        })?;
        ensure(self.alpha > 0.0 && self.alpha < 1.0, || {
            format!("alpha must lie in (0, 1), got {}", self.alpha)
        })?;
        ensure(self.mu.len() == self.n, || {
            format!("mean has length {}, expected n = {}", self.mu.len(), self.n)
        })
    }
}

/// New-approach residuals as the number of measurements varies. Each
/// `(m, replication)` pair draws its own sensing matrix and signal.
pub fn run_m_sweep(config: &MSweepConfig) -> Result<Vec<ResidualStats>> {
    config.validate()?;
    let c = config;
    let cells: Vec<(usize, usize)> = c
        .m_grid
        .iter()
        .flat_map(|&m| (0..c.reps).map(move |r| (m, r)))
        .collect();
    let outcomes = cells
        .par_iter()
        .map(|&(m, r)| {
            let phi = sensing_for_rep(
                c.n,
                m,
                c.seed,
                &[EXP_M_SWEEP, STREAM_PHI, m as u64, r as u64],
            )?;
            let x = sample_signal(
                &c.mu,
                c.sigma,
                derive_seed(c.seed, &[EXP_M_SWEEP, STREAM_EM_DRAW, m as u64, r as u64]),
            )?;
            let y = phi.measure(&x)?;
            let opts = PipelineOptions {
                convergence: c.em,
                test_scale: c.test_scale,
            };
            let res = recover_new_approach(&phi, &y, c.sigma, c.alpha, &opts)?;
            let exact = res
                .support_used
                .as_ref()
                .is_some_and(|s| s.indices() == c.mu.support());
            Ok(((c.mu.values() - res.estimate).norm(), exact))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(c.m_grid
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let slice = &outcomes[i * c.reps..(i + 1) * c.reps];
            let values: Vec<f64> = slice.iter().map(|o| o.0).collect();
            let (mean, se) = mean_and_se(&values);
            ResidualStats {
                method: Method::New,
                residual_type: ResidualType::Mean,
                sigma: c.sigma,
                n: c.n,
                m,
                k: m,
                lambda: None,
                alpha: c.alpha,
                reps: c.reps,
                mean_residual: mean,
                se_residual: se,
                seed: c.seed,
                replicates: values,
                exact_support: Some(slice.iter().filter(|o| o.1).count()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error_matches_two_pass() {
        let v = [1.0, 2.0, 4.0, 7.0];
        let (mean, se) = mean_and_se(&v);
        assert_eq!(mean, 3.5);
        // deviations -2.5 -1.5 0.5 3.5 -> ss = 21, var = 7
        assert!((se - (7.0f64).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_and_se(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.as_str()).unwrap(), m);
        }
        assert!(Method::parse("lasso").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(50).unwrap();
        assert_eq!((c.m, c.k, c.outer_reps, c.inner_reps), (25, 25, 10, 1000));
        assert!(matches!(c.validate(), Err(Error::Budget { .. })));
        c.methods = vec![Method::Conventional, Method::New];
        c.validate().unwrap();
        c.m = 60;
        let err = c.validate().unwrap_err();
        assert_eq!(err.to_string(), "m must not exceed n");
    }

    #[test]
    fn init_study_requires_near_zero_start() {
        let phi = generate_sensing_matrix(4, 2, 1).unwrap();
        let mu = default_mean(4).unwrap();
        let inits = vec![("big".to_string(), DVector::from_element(4, 10.0))];
        assert!(run_init_study(&phi, &mu, 1.0, &inits, 0, &Default::default()).is_err());
    }

    #[test]
    fn m_sweep_rejects_m_above_n() {
        let c = MSweepConfig::new(10, 0.1, vec![5, 11]).unwrap();
        assert!(run_m_sweep(&c).is_err());
    }
}
