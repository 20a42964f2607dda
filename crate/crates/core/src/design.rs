//! Coupling-minimizing codebook design.
//!
//! With an estimated self-interference channel `H̄` whose entries are off by
//! i.i.d. `CN(0, ε²)` errors, the expected coupling between a transmit
//! codebook `F` and a receive codebook `W` is
//!
//! ```text
//! E ‖W* H F‖_F² = ‖W* H̄ F‖_F² + ε² ‖F‖_F² ‖W‖_F².
//! ```
//!
//! [`design_lonestar`] minimizes this by alternating between `F` and `W`,
//! keeping each codebook's mean squared gain deviation within `σ²` of the
//! conventional codebook and projecting every update onto the quantizer.
//!
//! ```
//! use lonestar::channel::{spherical_wave_channel, ArrayPlacement};
//! use lonestar::design::{design_lonestar, DesignProblem, LonestarConfig};
//! use lonestar::geometry::{coverage_region_grid, UpaGeometry};
//! use lonestar::quant::Quantizer;
//!
//! let geom = UpaGeometry::new(2, 2).unwrap();
//! let h = spherical_wave_channel(&geom, &geom, &ArrayPlacement::stacked(&geom)).unwrap();
//! let dirs = coverage_region_grid(-30.0, 30.0, 30.0, 0.0, 0.0, 1.0).unwrap();
//! let q = Quantizer::new(8, 8, 0.5).unwrap();
//! let problem = DesignProblem::new(&geom, &geom, &dirs, &dirs, &h, &q).unwrap();
//! let cfg = LonestarConfig { sigma_sq_tx: 0.05, sigma_sq_rx: 0.05, ..LonestarConfig::default() };
//! let out = design_lonestar(&problem, &cfg).unwrap();
//! assert!(out.objective_trace.last().unwrap() < &out.objective_trace[0]);
//! ```

use crate::codebook::coverage_variance;
use crate::error::{dimension, invalid};
use crate::geometry::{Direction, UpaGeometry};
use crate::quant::Quantizer;
use crate::solverkit::{solve_qcqp, QcqpProblem, SolveReport, SolverOptions};
use crate::{CMatrix, Result};

/// How the alternating minimization walks the codebooks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMode {
    /// Whole-codebook updates under one aggregate coverage budget.
    Full,
    /// One beam at a time under per-beam coverage budgets.
    Beamwise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LonestarConfig {
    /// Coverage budget of the transmit codebook.
    pub sigma_sq_tx: f64,
    /// Coverage budget of the receive codebook.
    pub sigma_sq_rx: f64,
    /// Per-entry variance of the channel estimation error.
    pub eps_sq: f64,
    /// Alternating rounds (full mode) or beam sweeps (beamwise mode).
    pub outer_iters: usize,
    pub mode: DesignMode,
    /// Post-projection coverage slack before a warning is raised.
    pub coverage_slack: f64,
    pub solver: SolverOptions,
}

impl Default for LonestarConfig {
    fn default() -> Self {
        Self {
            sigma_sq_tx: 10f64.powf(-1.5),
            sigma_sq_rx: 10f64.powf(-1.5),
            eps_sq: 0.0,
            outer_iters: 4,
            mode: DesignMode::Full,
            coverage_slack: 0.01,
            solver: SolverOptions { tol: 1e-5, ..SolverOptions::default() },
        }
    }
}

/// Arrays, coverage regions, channel estimate and hardware of one design.
#[derive(Debug, Clone)]
pub struct DesignProblem<'a> {
    pub tx_geom: &'a UpaGeometry,
    pub rx_geom: &'a UpaGeometry,
    pub tx_dirs: &'a [Direction],
    pub rx_dirs: &'a [Direction],
    /// `N_r x N_t`.
    pub h_bar: &'a CMatrix,
    pub quant: &'a Quantizer,
}

impl<'a> DesignProblem<'a> {
    pub fn new(
        tx_geom: &'a UpaGeometry,
        rx_geom: &'a UpaGeometry,
        tx_dirs: &'a [Direction],
        rx_dirs: &'a [Direction],
        h_bar: &'a CMatrix,
        quant: &'a Quantizer,
    ) -> Result<Self> {
        if h_bar.shape() != (rx_geom.num_elements(), tx_geom.num_elements()) {
            return Err(dimension(format!(
                "channel is {}x{}, arrays need {}x{}",
                h_bar.nrows(),
                h_bar.ncols(),
                rx_geom.num_elements(),
                tx_geom.num_elements()
            )));
        }
        if tx_dirs.is_empty() || rx_dirs.is_empty() {
            return Err(invalid("coverage regions must not be empty"));
        }
        Ok(Self { tx_geom, rx_geom, tx_dirs, rx_dirs, h_bar, quant })
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    /// Quantized transmit codebook, `N_t x M_tx`.
    pub f: CMatrix,
    /// Quantized receive codebook, `N_r x M_rx`.
    pub w: CMatrix,
    /// Expected coupling at the quantized initialization and after every
    /// projected update.
    pub objective_trace: Vec<f64>,
    /// `(tx, rx)` coverage variance after every projected update, aligned with
    /// `objective_trace`.
    pub coverage_trace: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// `‖W* H̄ F‖_F² + ε² ‖F‖_F² ‖W‖_F²`.
pub fn expected_coupling_objective(h_bar: &CMatrix, f: &CMatrix, w: &CMatrix, eps_sq: f64) -> Result<f64> {
    check_codebooks(h_bar, f, w)?;
    let c = w.adjoint() * h_bar * f;
    Ok(c.norm_squared() + eps_sq * f.norm_squared() * w.norm_squared())
}

/// Average coupling across all beam pairs scaled to an INR:
/// `gain_factor * ‖W* H F‖_F² / (M_tx M_rx)` with `gain_factor = P_tx G² / P_noise`.
pub fn avg_inr_surrogate(h: &CMatrix, f: &CMatrix, w: &CMatrix, gain_factor: f64) -> Result<f64> {
    check_codebooks(h, f, w)?;
    let c = w.adjoint() * h * f;
    Ok(gain_factor * c.norm_squared() / (f.ncols() * w.ncols()) as f64)
}

fn check_codebooks(h: &CMatrix, f: &CMatrix, w: &CMatrix) -> Result<()> {
    if f.nrows() != h.ncols() || w.nrows() != h.nrows() {
        return Err(dimension(format!(
            "channel is {}x{} but F has {} rows and W has {} rows",
            h.nrows(),
            h.ncols(),
            f.nrows(),
            w.nrows()
        )));
    }
    Ok(())
}

/// Transmit update: minimize expected coupling over `F` with `W` fixed.
///
/// `a_tx` holds the transmit responses of the coverage directions; the budget
/// is `σ² N_t² M_tx`. Returns the unquantized minimizer.
pub fn solve_subproblem_f(
    h_bar: &CMatrix,
    w: &CMatrix,
    a_tx: &CMatrix,
    eps_sq: f64,
    sigma_sq: f64,
    x0: Option<&CMatrix>,
    opts: &SolverOptions,
) -> Result<(CMatrix, SolveReport)> {
    check_budget(sigma_sq, eps_sq)?;
    if w.nrows() != h_bar.nrows() || a_tx.nrows() != h_bar.ncols() {
        return Err(dimension("receive codebook or transmit responses do not match the channel"));
    }
    let factor = w.adjoint() * h_bar;
    let n = a_tx.nrows() as f64;
    let p = QcqpProblem::from_factor(
        &factor,
        eps_sq * w.norm_squared(),
        a_tx.clone(),
        n,
        sigma_sq * n * n * a_tx.ncols() as f64,
    )?;
    solve_qcqp(&p, x0, opts)
}

/// Receive update: minimize expected coupling over `W` with `F` fixed.
pub fn solve_subproblem_w(
    h_bar: &CMatrix,
    f: &CMatrix,
    a_rx: &CMatrix,
    eps_sq: f64,
    sigma_sq: f64,
    x0: Option<&CMatrix>,
    opts: &SolverOptions,
) -> Result<(CMatrix, SolveReport)> {
    check_budget(sigma_sq, eps_sq)?;
    if f.nrows() != h_bar.ncols() || a_rx.nrows() != h_bar.nrows() {
        return Err(dimension("transmit codebook or receive responses do not match the channel"));
    }
    // ‖W* H̄ F‖² = ‖(H̄ F)* W‖².
    let factor = (h_bar * f).adjoint();
    let n = a_rx.nrows() as f64;
    let p = QcqpProblem::from_factor(
        &factor,
        eps_sq * f.norm_squared(),
        a_rx.clone(),
        n,
        sigma_sq * n * n * a_rx.ncols() as f64,
    )?;
    solve_qcqp(&p, x0, opts)
}

fn check_budget(sigma_sq: f64, eps_sq: f64) -> Result<()> {
    if !(sigma_sq.is_finite() && sigma_sq >= 0.0) {
        return Err(invalid(format!("coverage budget must be non-negative, got {sigma_sq}")));
    }
    if !(eps_sq.is_finite() && eps_sq >= 0.0) {
        return Err(invalid(format!("estimation error variance must be non-negative, got {eps_sq}")));
    }
    Ok(())
}

/// Alternating design of quantized transmit and receive codebooks.
///
/// Starts from the quantized conventional codebooks. Solver and coverage
/// issues are reported in `warnings` rather than as errors.
pub fn design_lonestar(problem: &DesignProblem<'_>, cfg: &LonestarConfig) -> Result<DesignResult> {
    check_budget(cfg.sigma_sq_tx, cfg.eps_sq)?;
    check_budget(cfg.sigma_sq_rx, cfg.eps_sq)?;
    let a_tx = problem.tx_geom.array_response_matrix(problem.tx_dirs);
    let a_rx = problem.rx_geom.array_response_matrix(problem.rx_dirs);
    let q = problem.quant;
    let mut state = State {
        problem,
        cfg,
        f: q.project_matrix(&a_tx),
        w: q.project_matrix(&a_rx),
        objective_trace: Vec::new(),
        coverage_trace: Vec::new(),
        warnings: Vec::new(),
    };
    state.record()?;
    if state.objective_trace[0] < cfg.solver.tol {
        return state.finish();
    }
    match cfg.mode {
        DesignMode::Full => {
            for round in 0..cfg.outer_iters {
                let (f, rep) =
                    solve_subproblem_f(problem.h_bar, &state.w, &a_tx, cfg.eps_sq, cfg.sigma_sq_tx, Some(&state.f), &cfg.solver)?;
                state.note(&rep, &format!("round {round} transmit update"));
                state.f = q.project_matrix(&f);
                state.record()?;
                let (w, rep) =
                    solve_subproblem_w(problem.h_bar, &state.f, &a_rx, cfg.eps_sq, cfg.sigma_sq_rx, Some(&state.w), &cfg.solver)?;
                state.note(&rep, &format!("round {round} receive update"));
                state.w = q.project_matrix(&w);
                state.record()?;
            }
        }
        DesignMode::Beamwise => {
            let m = a_tx.ncols().max(a_rx.ncols());
            for sweep in 0..cfg.outer_iters {
                for k in 0..m {
                    if k < a_tx.ncols() {
                        let a = a_tx.columns(k, 1).into_owned();
                        let x0 = state.f.columns(k, 1).into_owned();
                        let (f, rep) =
                            solve_subproblem_f(problem.h_bar, &state.w, &a, cfg.eps_sq, cfg.sigma_sq_tx, Some(&x0), &cfg.solver)?;
                        state.note(&rep, &format!("sweep {sweep} transmit beam {k}"));
                        state.f.set_column(k, &q.project_matrix(&f).column(0));
                        state.record()?;
                    }
                    if k < a_rx.ncols() {
                        let a = a_rx.columns(k, 1).into_owned();
                        let x0 = state.w.columns(k, 1).into_owned();
                        let (w, rep) =
                            solve_subproblem_w(problem.h_bar, &state.f, &a, cfg.eps_sq, cfg.sigma_sq_rx, Some(&x0), &cfg.solver)?;
                        state.note(&rep, &format!("sweep {sweep} receive beam {k}"));
                        state.w.set_column(k, &q.project_matrix(&w).column(0));
                        state.record()?;
                    }
                }
            }
        }
    }
    state.finish()
}

struct State<'p, 'a> {
    problem: &'p DesignProblem<'a>,
    cfg: &'p LonestarConfig,
    f: CMatrix,
    w: CMatrix,
    objective_trace: Vec<f64>,
    coverage_trace: Vec<(f64, f64)>,
    warnings: Vec<String>,
}

impl State<'_, '_> {
    fn record(&mut self) -> Result<()> {
        let p = self.problem;
        self.objective_trace.push(expected_coupling_objective(p.h_bar, &self.f, &self.w, self.cfg.eps_sq)?);
        self.coverage_trace.push((
            coverage_variance(p.tx_geom, p.tx_dirs, &self.f)?,
            coverage_variance(p.rx_geom, p.rx_dirs, &self.w)?,
        ));
        Ok(())
    }

    fn note(&mut self, rep: &SolveReport, what: &str) {
        if !rep.converged {
            self.warnings.push(format!(
                "{what}: solver stopped at an iteration cap (kkt residual {:.3e})",
                rep.kkt_residual
            ));
        }
    }

    fn finish(mut self) -> Result<DesignResult> {
        let (ctx, crx) = *self.coverage_trace.last().expect("trace has the initial entry");
        let slack = self.cfg.coverage_slack;
        if ctx > self.cfg.sigma_sq_tx + slack {
            self.warnings.push(format!(
                "transmit coverage variance {ctx:.4e} exceeds budget {:.4e} plus slack {slack}",
                self.cfg.sigma_sq_tx
            ));
        }
        if crx > self.cfg.sigma_sq_rx + slack {
            self.warnings.push(format!(
                "receive coverage variance {crx:.4e} exceeds budget {:.4e} plus slack {slack}",
                self.cfg.sigma_sq_rx
            ));
        }
        Ok(DesignResult {
            f: self.f,
            w: self.w,
            objective_trace: self.objective_trace,
            coverage_trace: self.coverage_trace,
            warnings: self.warnings,
        })
    }
}
