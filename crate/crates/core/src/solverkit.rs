//! Column-separable quadratic program with a shared coverage budget.
//!
//! The problem solved by [`solve_qcqp`] is
//!
//! ```text
//! minimize    Σ_i x_i* Q x_i
//! subject to  Σ_i |t - a_i* x_i|² ≤ S,   |X_nj| ≤ 1
//! ```
//!
//! over an `N x M` matrix `X` with columns `x_i`, where `Q` is Hermitian
//! positive semidefinite and `a_i` are the columns of a response matrix `A`.
//! The coverage constraint is handled by bisection on its multiplier `μ`; for
//! each `μ` the columns decouple into box-constrained quadratics solved by a
//! monotone accelerated projected gradient method with fixed step `1/L`.
//!
//! ```
//! use lonestar::solverkit::{solve_qcqp, QcqpProblem, SolverOptions};
//! use lonestar::{CMatrix, C64};
//!
//! // Two elements, one beam; the budget forces a trade-off against Q.
//! let q = CMatrix::from_row_slice(2, 2, &[
//!     C64::new(2.0, 0.0), C64::new(1.0, 0.0),
//!     C64::new(1.0, 0.0), C64::new(2.0, 0.0),
//! ]);
//! let a = CMatrix::from_element(2, 1, C64::new(1.0, 0.0));
//! let p = QcqpProblem::new(q, a, 2.0, 1.0).unwrap();
//! let (x, report) = solve_qcqp(&p, None, &SolverOptions::default()).unwrap();
//! assert!(p.coverage(&x) <= 1.0 + 1e-9);
//! assert!(report.objective < p.objective(&p.responses));
//! ```

use crate::error::{dimension, invalid};
use crate::{CMatrix, Result, C64};

/// Data of one subproblem.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    /// `Q`, `N x N`.
    pub gram: CMatrix,
    /// `A`, `N x M`.
    pub responses: CMatrix,
    /// Gain target `t`.
    pub target: f64,
    /// Coverage budget `S`.
    pub budget: f64,
}

impl QcqpProblem {
    pub fn new(gram: CMatrix, responses: CMatrix, target: f64, budget: f64) -> Result<Self> {
        if !gram.is_square() {
            return Err(dimension(format!("quadratic form is {}x{}, not square", gram.nrows(), gram.ncols())));
        }
        if responses.nrows() != gram.nrows() {
            return Err(dimension(format!(
                "responses have {} rows but the quadratic form is {}x{}",
                responses.nrows(),
                gram.nrows(),
                gram.ncols()
            )));
        }
        if !(target.is_finite() && target > 0.0) {
            return Err(invalid(format!("gain target must be positive, got {target}")));
        }
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(invalid(format!("coverage budget must be non-negative, got {budget}")));
        }
        Ok(Self { gram, responses, target, budget })
    }

    /// Builds `Q = B* B + ridge I`.
    pub fn from_factor(factor: &CMatrix, ridge: f64, responses: CMatrix, target: f64, budget: f64) -> Result<Self> {
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(invalid(format!("ridge must be non-negative, got {ridge}")));
        }
        let n = factor.ncols();
        let gram = factor.adjoint() * factor + CMatrix::identity(n, n) * C64::new(ridge, 0.0);
        Self::new(gram, responses, target, budget)
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn num_columns(&self) -> usize {
        self.responses.ncols()
    }

    /// `Σ_i x_i* Q x_i`.
    pub fn objective(&self, x: &CMatrix) -> f64 {
        let qx = &self.gram * x;
        column_quadratic(x, &qx).iter().sum()
    }

    /// `Σ_i |t - a_i* x_i|²`.
    pub fn coverage(&self, x: &CMatrix) -> f64 {
        coverage_residuals(&self.responses, x, self.target).iter().map(|r| r.norm_sqr()).sum()
    }

    fn check_shape(&self, x: &CMatrix) -> Result<()> {
        if x.shape() != self.responses.shape() {
            return Err(dimension(format!(
                "iterate is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                self.responses.nrows(),
                self.responses.ncols()
            )));
        }
        Ok(())
    }
}

/// Stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance for stationarity and for the budget gap.
    pub tol: f64,
    /// Projected-gradient iterations per multiplier value.
    pub max_inner_iters: usize,
    /// Multiplier bracketing plus bisection steps.
    pub max_bisection_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_inner_iters: 5000, max_bisection_iters: 200 }
    }
}

/// Outcome of [`solve_qcqp`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub objective: f64,
    /// Larger of the relative projected-gradient norm and relative complementarity gap.
    pub kkt_residual: f64,
    /// Budget violation `max(coverage - S, 0)`.
    pub constraint_residual: f64,
    /// Total projected-gradient iterations across all multiplier values.
    pub inner_iterations: usize,
    pub multiplier: f64,
    /// False when an iteration cap was hit before the tolerances were met.
    pub converged: bool,
}

/// Projects each entry onto the closed unit disc, keeping its phase.
pub fn project_disc(x: &CMatrix) -> CMatrix {
    x.map(clamp_unit)
}

fn clamp_unit(z: C64) -> C64 {
    let m = z.norm();
    if m > 1.0 {
        z / m
    } else {
        z
    }
}

/// Upper bound on the largest singular value of `m`.
///
/// Power iteration on `m* m` from a fixed start vector, at most 50 steps or
/// until the estimate changes by less than `1e-6` relative, inflated by 1%.
pub fn spectral_norm_bound(m: &CMatrix) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v = CMatrix::from_fn(n, 1, |_, _| {
        let re = splitmix_unit(&mut state);
        let im = splitmix_unit(&mut state);
        C64::new(re, im)
    });
    let nv = v.norm();
    v /= C64::new(nv, 0.0);
    let mut sigma = 0.0f64;
    for _ in 0..50 {
        let mv = m * &v;
        let est = mv.norm();
        let w = m.adjoint() * mv;
        let nw = w.norm();
        if nw == 0.0 {
            return 1.01 * est;
        }
        v = w / C64::new(nw, 0.0);
        let done = (est - sigma).abs() <= 1e-6 * est;
        sigma = est;
        if done {
            break;
        }
    }
    1.01 * sigma
}

fn splitmix_unit(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn column_quadratic(x: &CMatrix, qx: &CMatrix) -> Vec<f64> {
    (0..x.ncols()).map(|i| x.column(i).dotc(&qx.column(i)).re).collect()
}

fn coverage_residuals(a: &CMatrix, x: &CMatrix, target: f64) -> Vec<C64> {
    (0..x.ncols()).map(|i| C64::new(target, 0.0) - a.column(i).dotc(&x.column(i))).collect()
}

/// Result of the fixed-multiplier inner solve.
#[derive(Debug, Clone)]
pub struct PenalizedSolution {
    pub x: CMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective after each iteration.
    pub trace: Vec<f64>,
}

/// Minimizes `Σ_i x_i* Q x_i + μ |t - a_i* x_i|²` over the unit-disc box.
///
/// `lip_q` must bound the largest eigenvalue of `Q`. The objective is
/// nonincreasing from one iteration to the next.
pub fn minimize_penalized(
    p: &QcqpProblem,
    mu: f64,
    x0: &CMatrix,
    lip_q: f64,
    opts: &SolverOptions,
) -> Result<PenalizedSolution> {
    p.check_shape(x0)?;
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(invalid(format!("multiplier must be non-negative, got {mu}")));
    }
    let a = &p.responses;
    let t = p.target;
    let amax2 = (0..a.ncols()).map(|i| a.column(i).norm_squared()).fold(0.0, f64::max);
    let lip = (2.0 * (lip_q + mu * amax2)).max(f64::MIN_POSITIVE);
    let scale = a.norm().max(1.0);

    let penalized = |x: &CMatrix, qx: &CMatrix| -> Vec<f64> {
        let quad = column_quadratic(x, qx);
        let res = coverage_residuals(a, x, t);
        quad.iter().zip(res.iter()).map(|(q, r)| q + mu * r.norm_sqr()).collect()
    };
    let gradient = |x: &CMatrix, qx: &CMatrix| -> CMatrix {
        let res = coverage_residuals(a, x, t);
        let mut g = qx.clone();
        for (i, r) in res.iter().enumerate() {
            let mut col = g.column_mut(i);
            col.axpy(-mu * r, &a.column(i), C64::new(1.0, 0.0));
        }
        g * C64::new(2.0, 0.0)
    };
    let stationarity = |x: &CMatrix, qx: &CMatrix| -> f64 {
        let g = gradient(x, qx);
        let step = project_disc(&(x - g / C64::new(lip, 0.0)));
        (x - step).norm() / scale
    };

    let mut x = project_disc(x0);
    let mut qx = &p.gram * &x;
    let mut phi_x = penalized(&x, &qx);
    let mut y = x.clone();
    let mut qy = qx.clone();
    let mut theta = 1.0f64;
    let mut trace = Vec::new();
    let mut converged = stationarity(&x, &qx) <= opts.tol;
    let mut iterations = 0;

    while !converged && iterations < opts.max_inner_iters {
        iterations += 1;
        let g = gradient(&y, &qy);
        let z = project_disc(&(&y - g / C64::new(lip, 0.0)));
        let qz = &p.gram * &z;
        let phi_z = penalized(&z, &qz);

        let mut x_new = x.clone();
        let mut qx_new = qx.clone();
        let mut phi_new = phi_x.clone();
        for i in 0..z.ncols() {
            if phi_z[i] <= phi_x[i] {
                x_new.set_column(i, &z.column(i));
                qx_new.set_column(i, &qz.column(i));
                phi_new[i] = phi_z[i];
            }
        }
        let restart = phi_z.iter().sum::<f64>() > phi_x.iter().sum::<f64>();
        let theta_new = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
        if restart {
            theta = 1.0;
            y = x_new.clone();
            qy = qx_new.clone();
        } else {
            let c1 = C64::new(theta / theta_new, 0.0);
            let c2 = C64::new((theta - 1.0) / theta_new, 0.0);
            y = &x_new + (&z - &x_new) * c1 + (&x_new - &x) * c2;
            qy = &qx_new + (&qz - &qx_new) * c1 + (&qx_new - &qx) * c2;
            theta = theta_new;
        }
        x = x_new;
        qx = qx_new;
        phi_x = phi_new;
        trace.push(phi_x.iter().sum());
        converged = stationarity(&x, &qx) <= opts.tol;
    }
    Ok(PenalizedSolution { x, iterations, converged, trace })
}

/// Solves the budgeted problem, warm-started from `x0` (default `A`).
///
/// With `S = 0`, unit-modulus responses and `t = N` the feasible set is the
/// single point `A`, which is returned directly. If `x0` is feasible and
/// better than the computed point, `x0` is returned.
pub fn solve_qcqp(p: &QcqpProblem, x0: Option<&CMatrix>, opts: &SolverOptions) -> Result<(CMatrix, SolveReport)> {
    if let Some(x0) = x0 {
        p.check_shape(x0)?;
    }
    let a = &p.responses;
    let m = a.ncols();
    let n = p.dim();
    let s = p.budget;

    if s == 0.0 {
        let unit = a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12);
        if !unit || (p.target - n as f64).abs() > 1e-12 * n as f64 {
            return Err(invalid("zero coverage budget needs unit-modulus responses and a target equal to the array size"));
        }
        let x = a.clone();
        let report = SolveReport {
            objective: p.objective(&x),
            kkt_residual: 0.0,
            constraint_residual: p.coverage(&x).max(0.0),
            inner_iterations: 0,
            multiplier: f64::INFINITY,
            converged: true,
        };
        return Ok((x, report));
    }

    if m as f64 * p.target * p.target <= s {
        let x = CMatrix::zeros(n, m);
        let report = SolveReport {
            objective: 0.0,
            kkt_residual: 0.0,
            constraint_residual: 0.0,
            inner_iterations: 0,
            multiplier: 0.0,
            converged: true,
        };
        return Ok((x, report));
    }

    let lip_q = spectral_norm_bound(&p.gram);
    let amax2 = (0..m).map(|i| a.column(i).norm_squared()).fold(0.0, f64::max);
    let start = x0.cloned().unwrap_or_else(|| project_disc(a));

    let mut inner_total = 0;
    let mut converged = true;
    let mut steps = 0;

    let mut mu_lo = 0.0;
    let mut mu_hi = if lip_q > 0.0 { lip_q / amax2 } else { 1.0 };
    let mut sol = minimize_penalized(p, mu_hi, &start, lip_q, opts)?;
    inner_total += sol.iterations;
    converged &= sol.converged;
    while p.coverage(&sol.x) > s {
        steps += 1;
        if steps >= opts.max_bisection_iters {
            return Err(invalid("could not find a multiplier meeting the coverage budget"));
        }
        mu_lo = mu_hi;
        mu_hi *= 4.0;
        sol = minimize_penalized(p, mu_hi, &sol.x, lip_q, opts)?;
        inner_total += sol.iterations;
        converged &= sol.converged;
    }
    let mut x_hi = sol.x;
    let initial_width = mu_hi - mu_lo;
    let mut bracket_ok = false;
    loop {
        let gap = s - p.coverage(&x_hi);
        if gap <= opts.tol * s {
            bracket_ok = true;
            break;
        }
        if mu_hi - mu_lo < 1e-9 * initial_width {
            bracket_ok = true;
            break;
        }
        if steps >= opts.max_bisection_iters {
            break;
        }
        steps += 1;
        let mu = if mu_lo > 0.0 { (mu_lo * mu_hi).sqrt() } else { 0.5 * mu_hi };
        let trial = minimize_penalized(p, mu, &x_hi, lip_q, opts)?;
        inner_total += trial.iterations;
        converged &= trial.converged;
        if p.coverage(&trial.x) <= s {
            mu_hi = mu;
            x_hi = trial.x;
        } else {
            mu_lo = mu;
        }
    }
    converged &= bracket_ok;

    let mut x = x_hi;
    let mut mu = mu_hi;
    if let Some(x0) = x0 {
        let x0p = project_disc(x0);
        if (&x0p - x0).norm() == 0.0 && p.coverage(x0) <= s && p.objective(x0) < p.objective(&x) {
            x = x0.clone();
            mu = f64::NAN;
        }
    }

    let objective = p.objective(&x);
    let cov = p.coverage(&x);
    let kkt_residual = if mu.is_finite() {
        let lip = 2.0 * (lip_q + mu * amax2);
        let qx = &p.gram * &x;
        let res = coverage_residuals(a, &x, p.target);
        let mut g = qx;
        for (i, r) in res.iter().enumerate() {
            g.column_mut(i).axpy(-mu * r, &a.column(i), C64::new(1.0, 0.0));
        }
        g *= C64::new(2.0, 0.0);
        let stat = (&x - project_disc(&(&x - g / C64::new(lip, 0.0)))).norm() / a.norm().max(1.0);
        let comp = mu * (s - cov).abs() / (objective + mu * s).max(f64::MIN_POSITIVE);
        stat.max(comp)
    } else {
        f64::NAN
    };
    let report = SolveReport {
        objective,
        kkt_residual,
        constraint_residual: (cov - s).max(0.0),
        inner_iterations: inner_total,
        multiplier: mu,
        converged,
    };
    Ok((x, report))
}
