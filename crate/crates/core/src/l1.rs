//! Penalised L1 reconstruction, `argmin_s ½‖y − As‖² + λ‖s‖₁`, solved by a
//! monotone accelerated proximal-gradient method (MFISTA).

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Result};
use crate::linalg::SensingMatrix;

const POWER_ITERATIONS: usize = 50;
const POWER_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct L1Problem {
    /// `A = φψ`.
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
    /// Sparsifying basis ψ used to map `ŝ` back to `x̂`; identity when absent.
    pub basis: Option<DMatrix<f64>>,
}

impl L1Problem {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        let p = Self {
            a,
            y,
            lambda,
            basis: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn objective(&self, s: &DVector<f64>) -> f64 {
        0.5 * (&self.y - &self.a * s).norm_squared() + self.lambda * s.lp_norm(1)
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        ensure(self.lambda > 0.0 && self.lambda.is_finite(), || {
            format!("lambda must be positive, got {}", self.lambda)
        })?;
        ensure(self.a.iter().all(|v| v.is_finite()), || {
            "measurement matrix has non-finite entries".into()
        })?;
        ensure(self.y.len() == m, || {
            format!(
                "dimension mismatch: y has length {}, A has {m} rows",
                self.y.len()
            )
        })?;
        if let Some(psi) = &self.basis {
            ensure(psi.shape() == (n, n), || {
                format!("basis must be {n}x{n}, got {}x{}", psi.nrows(), psi.ncols())
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Options {
    /// Target for the KKT residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for L1Options {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Solution {
    pub s_hat: DVector<f64>,
    /// `ψ ŝ`
    pub x_hat: DVector<f64>,
    pub iterations: usize,
    /// Objective at the start and after every iteration.
    pub objective_trajectory: Vec<f64>,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Universal threshold `σ√(2 ln n)`.
pub fn default_lambda(sigma: f64, n: usize) -> f64 {
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

/// `sign(vᵢ)·max(|vᵢ| − t, 0)` coordinatewise.
pub fn soft_threshold(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|x| shrink(x, t))
}

#[inline]
fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Max-norm distance of `g = A'(y − As)` from `λ·∂‖s‖₁`.
pub fn kkt_residual(g: &DVector<f64>, s: &DVector<f64>, lambda: f64) -> f64 {
    g.iter()
        .zip(s.iter())
        .map(|(&gi, &si)| {
            if si > 0.0 {
                (gi - lambda).abs()
            } else if si < 0.0 {
                (gi + lambda).abs()
            } else {
                (gi.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of `A'A` by power iteration.
fn lipschitz_constant(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt().fract());
    v /= v.norm();
    let mut av = DVector::zeros(a.nrows());
    let mut w = DVector::zeros(n);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        av.gemv(1.0, a, &v, 0.0);
        w.gemv_tr(1.0, a, &av, 0.0);
        let next = w.norm();
        if next == 0.0 {
            break;
        }
        v.copy_from(&w);
        v /= next;
        let done = (next - estimate).abs() <= POWER_REL_TOL * next;
        estimate = next;
        if done {
            break;
        }
    }
    if estimate > 0.0 {
        estimate
    } else {
        a.norm_squared()
    }
}

pub fn solve_l1(p: &L1Problem, opts: &L1Options) -> Result<L1Solution> {
    p.validate()?;
    ensure(opts.tol >= 0.0, || {
        "KKT tolerance must be nonnegative".into()
    })?;
    let (m, n) = p.a.shape();
    let a = &p.a;
    let lambda = p.lambda;
    let finish = |s_hat: DVector<f64>, iterations, trajectory, kkt, converged| {
        let x_hat = match &p.basis {
            Some(psi) => psi * &s_hat,
            None => s_hat.clone(),
        };
        L1Solution {
            s_hat,
            x_hat,
            iterations,
            objective_trajectory: trajectory,
            kkt_residual: kkt,
            converged,
        }
    };

    if a.iter().all(|&v| v == 0.0) {
        let zero = DVector::zeros(n);
        let f = p.objective(&zero);
        return Ok(finish(zero, 0, vec![f], 0.0, true));
    }

    let lip = lipschitz_constant(a);
    let step = 1.0 / lip;

    let mut x = DVector::zeros(n);
    let mut x_prev = DVector::zeros(n);
    let mut yk = DVector::zeros(n);
    let mut z = DVector::zeros(n);
    let mut resid = DVector::zeros(m);
    let mut grad = DVector::zeros(n);
    let mut t = 1.0_f64;

    // at s = 0 the residual is y itself
    let mut f_x = 0.5 * p.y.norm_squared();
    grad.gemv_tr(1.0, a, &p.y, 0.0);
    let mut kkt = kkt_residual(&grad, &x, lambda);
    let mut trajectory = vec![f_x];
    if kkt <= opts.tol {
        return Ok(finish(x, 0, trajectory, kkt, true));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;

        // forward-backward step from the extrapolated point
        resid.copy_from(&p.y);
        resid.gemv(-1.0, a, &yk, 1.0);
        grad.gemv_tr(1.0, a, &resid, 0.0);
        for i in 0..n {
            z[i] = shrink(yk[i] + step * grad[i], lambda * step);
        }

        resid.copy_from(&p.y);
        resid.gemv(-1.0, a, &z, 1.0);
        let f_z = 0.5 * resid.norm_squared() + lambda * z.lp_norm(1);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accepted = f_z <= f_x;
        if accepted {
            x_prev.copy_from(&x);
            x.copy_from(&z);
            f_x = f_z;
            grad.gemv_tr(1.0, a, &resid, 0.0);
            kkt = kkt_residual(&grad, &x, lambda);
        }
        // MFISTA extrapolation; x_prev is the last accepted iterate
        let c1 = t / t_next;
        let c2 = (t - 1.0) / t_next;
        for i in 0..n {
            let xi = x[i];
            yk[i] = xi + c1 * (z[i] - xi) + if accepted { c2 * (xi - x_prev[i]) } else { 0.0 };
        }
        t = t_next;
        trajectory.push(f_x);

        if kkt <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(finish(x, iterations, trajectory, kkt, converged))
}

/// Conventional CS reconstruction: `A = φψ`, solve the penalised problem,
/// return both `ŝ` and `x̂ = ψŝ`.
pub fn recover_conventional(
    phi: &SensingMatrix,
    y: &DVector<f64>,
    lambda: f64,
    basis: Option<&DMatrix<f64>>,
    opts: &L1Options,
) -> Result<L1Solution> {
    phi.check_measurement(y)?;
    let n = phi.cols();
    let a = match basis {
        Some(psi) => {
            ensure(psi.shape() == (n, n), || {
                format!("basis must be {n}x{n}, got {}x{}", psi.nrows(), psi.ncols())
            })?;
            phi.phi() * psi
        }
        None => phi.phi().clone(),
    };
    let problem = L1Problem {
        a,
        y: y.clone(),
        lambda,
        basis: basis.cloned(),
    };
    solve_l1(&problem, opts)
}
