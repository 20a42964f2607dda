//! Seeded Monte Carlo evaluation of codebooks.
//!
//! Each trial drops a downlink and an uplink user uniformly over the user
//! region, gives each a line-of-sight channel, picks the SNR-maximizing beams
//! from the codebooks under test, and scores the full-duplex sum rate against
//! the interference-free capacity of the conventional codebooks for the same
//! two users.
//!
//! Trial `t` draws from its own ChaCha stream keyed by `(seed, t)`, so results
//! do not depend on thread count or scheduling.
//!
//! ```
//! use lonestar::montecarlo::{run_scenario, ScenarioConfig};
//!
//! let cfg = ScenarioConfig { rows: 4, cols: 4, n_trials: 20, inrbar_db: f64::NEG_INFINITY, ..ScenarioConfig::default() };
//! let trials = run_scenario(&cfg).unwrap();
//! assert!(trials.iter().all(|t| t.gamma_sum == 1.0));
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_true_channel, rayleigh_mixture, spherical_wave_channel, ArrayPlacement};
use crate::codebook::{cbf_codebook, taylor_codebook, DEFAULT_TAYLOR_NBAR};
use crate::design::{design_lonestar, DesignProblem, DesignResult, LonestarConfig};
use crate::error::{dimension, invalid};
use crate::geometry::{grid_from_ranges, AngleRange, Direction, UpaGeometry};
use crate::metrics::{self, db, LinkBudget};
use crate::quant::Quantizer;
use crate::{CMatrix, CVector, Result};

/// Channel estimate `H̄` used to design codebooks.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    /// Spherical-wave channel between vertically stacked arrays.
    Spherical,
    /// Spherical-wave plus Rayleigh scattering of variance `zeta_sq`, drawn
    /// once per scenario.
    Mixture { zeta_sq: f64 },
    /// A channel supplied by the caller, `N x N`.
    Given { h: CMatrix },
}

/// Codebooks under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum CodebookKind {
    Cbf,
    Taylor { sll_db: f64, nbar: usize },
    /// Coupling-minimizing design; `eps_sq` is taken from the scenario.
    Lonestar(LonestarConfig),
    /// Precomputed transmit and receive codebooks.
    Given { f: CMatrix, w: CMatrix },
}

impl CodebookKind {
    pub fn taylor(sll_db: f64) -> Self {
        Self::Taylor { sll_db, nbar: DEFAULT_TAYLOR_NBAR }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_trials: usize,
    /// Array shape, shared by the transmit and receive arrays.
    pub rows: usize,
    pub cols: usize,
    /// Codebook coverage grid.
    pub grid_az: AngleRange,
    pub grid_el: AngleRange,
    /// Users are uniform over `[-user_az_max, user_az_max] x [-user_el_max, user_el_max]`.
    pub user_az_max: f64,
    pub user_el_max: f64,
    pub snrbar_tx_db: f64,
    pub snrbar_rx_db: f64,
    pub inrbar_db: f64,
    pub inr_tx_db: f64,
    pub phase_bits: u32,
    pub amp_bits: u32,
    pub atten_step_db: f64,
    pub channel: ChannelKind,
    /// Per-entry variance of the error between `H̄` and each trial's true channel.
    pub eps_sq: f64,
    pub codebook: CodebookKind,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trials: 500,
            rows: 8,
            cols: 8,
            grid_az: AngleRange { start: -60.0, step: 15.0, stop: 60.0 },
            grid_el: AngleRange { start: -30.0, step: 15.0, stop: 30.0 },
            user_az_max: 67.5,
            user_el_max: 37.5,
            snrbar_tx_db: 10.0,
            snrbar_rx_db: 10.0,
            inrbar_db: 90.0,
            inr_tx_db: f64::NEG_INFINITY,
            phase_bits: 8,
            amp_bits: 8,
            atten_step_db: 0.5,
            channel: ChannelKind::Spherical,
            eps_sq: 0.0,
            codebook: CodebookKind::Cbf,
        }
    }
}

/// Per-trial outcome. dB fields are `-inf` for zero linear values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub snr_tx_db: f64,
    pub snr_rx_db: f64,
    pub inr_rx_db: f64,
    pub inr_tx_db: f64,
    pub r_tx: f64,
    pub r_rx: f64,
    pub gamma_sum: f64,
}

/// Everything shared by the trials of one scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub geom: UpaGeometry,
    pub directions: Vec<Direction>,
    pub budget: LinkBudget,
    /// Channel the codebooks were designed for.
    pub h_bar: CMatrix,
    pub f: CMatrix,
    pub w: CMatrix,
    pub f_cbf: CMatrix,
    pub w_cbf: CMatrix,
    /// Present when the codebooks were designed.
    pub design: Option<DesignResult>,
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self> {
        let geom = UpaGeometry::new(cfg.rows, cfg.cols)?;
        let directions = grid_from_ranges(&cfg.grid_az, &cfg.grid_el)?;
        let quant = Quantizer::new(cfg.phase_bits, cfg.amp_bits, cfg.atten_step_db)?;
        if cfg.n_trials == 0 {
            return Err(invalid("scenario needs at least one trial"));
        }
        if !(0.0..=180.0).contains(&cfg.user_az_max) || !(0.0..=90.0).contains(&cfg.user_el_max) {
            return Err(invalid("user region must lie within azimuth [0, 180] and elevation [0, 90]"));
        }
        if !(cfg.eps_sq.is_finite() && cfg.eps_sq >= 0.0) {
            return Err(invalid(format!("estimation error variance must be non-negative, got {}", cfg.eps_sq)));
        }
        let eps_sq = cfg.eps_sq;
        let h_bar = match &cfg.channel {
            ChannelKind::Spherical => spherical_wave_channel(&geom, &geom, &ArrayPlacement::stacked(&geom))?,
            ChannelKind::Mixture { zeta_sq } => {
                let h_sw = spherical_wave_channel(&geom, &geom, &ArrayPlacement::stacked(&geom))?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(u64::MAX);
                rayleigh_mixture(&h_sw, *zeta_sq, &mut rng)?
            }
            ChannelKind::Given { h } => {
                let n = geom.num_elements();
                if h.shape() != (n, n) {
                    return Err(dimension(format!("given channel is {}x{}, array needs {n}x{n}", h.nrows(), h.ncols())));
                }
                h.clone()
            }
        };
        let f_cbf = cbf_codebook(&geom, &directions, &quant);
        let w_cbf = f_cbf.clone();
        let mut design = None;
        let (f, w) = match &cfg.codebook {
            CodebookKind::Cbf => (f_cbf.clone(), w_cbf.clone()),
            CodebookKind::Taylor { sll_db, nbar } => {
                let t = taylor_codebook(&geom, &directions, &quant, *sll_db, *nbar)?;
                (t.clone(), t)
            }
            CodebookKind::Lonestar(lc) => {
                let lc = LonestarConfig { eps_sq, ..lc.clone() };
                let problem = DesignProblem::new(&geom, &geom, &directions, &directions, &h_bar, &quant)?;
                let out = design_lonestar(&problem, &lc)?;
                let fw = (out.f.clone(), out.w.clone());
                design = Some(out);
                fw
            }
            CodebookKind::Given { f, w } => {
                let n = geom.num_elements();
                if f.nrows() != n || w.nrows() != n {
                    return Err(dimension(format!(
                        "given codebooks have {} and {} rows, array has {n} elements",
                        f.nrows(),
                        w.nrows()
                    )));
                }
                if f.ncols() == 0 || w.ncols() == 0 {
                    return Err(invalid("given codebooks must have at least one beam"));
                }
                (f.clone(), w.clone())
            }
        };
        let n = geom.num_elements();
        let budget = LinkBudget::from_targets(cfg.snrbar_tx_db, cfg.snrbar_rx_db, cfg.inrbar_db, cfg.inr_tx_db, n, n);
        Ok(Self { config: cfg.clone(), geom, directions, budget, h_bar, f, w, f_cbf, w_cbf, design })
    }

    /// Same codebooks and channel under a different link budget or trial count.
    fn rebudget(&self, cfg: &ScenarioConfig) -> Self {
        let n = self.geom.num_elements();
        let mut s = self.clone();
        s.budget = LinkBudget::from_targets(cfg.snrbar_tx_db, cfg.snrbar_rx_db, cfg.inrbar_db, cfg.inr_tx_db, n, n);
        s.config = cfg.clone();
        s
    }

    fn trial_rng(&self, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(t as u64);
        rng
    }

    /// Runs trial `t`.
    pub fn run_trial(&self, t: usize) -> Result<TrialResult> {
        let cfg = &self.config;
        let mut rng = self.trial_rng(t);
        let user = |rng: &mut ChaCha8Rng| -> Result<Direction> {
            let az = rng.gen_range(-cfg.user_az_max..=cfg.user_az_max);
            let el = rng.gen_range(-cfg.user_el_max..=cfg.user_el_max);
            Direction::new(az, el)
        };
        let d_tx = user(&mut rng)?;
        let d_rx = user(&mut rng)?;
        let h_tx = self.geom.array_response(&d_tx);
        let h_rx = self.geom.array_response(&d_rx);
        let h = if cfg.eps_sq > 0.0 {
            draw_true_channel(&self.h_bar, cfg.eps_sq, &mut rng)?
        } else {
            self.h_bar.clone()
        };
        run_trial(&self.budget, &h, &h_tx, &h_rx, &self.f, &self.w, &self.f_cbf, &self.w_cbf, t)
    }

    pub fn run(&self) -> Result<Vec<TrialResult>> {
        (0..self.config.n_trials).into_par_iter().map(|t| self.run_trial(t)).collect()
    }
}

/// Index of the beam with the largest `|h* f_i|² / ‖f_i‖²`, lowest index on ties.
///
/// The same rule serves both ends: it maximizes the downlink SNR for unit
/// modulus codebooks and the uplink SNR for any receive codebook.
pub fn beam_align(h: &CVector, codebook: &CMatrix, normalize: bool) -> Result<usize> {
    if h.len() != codebook.nrows() {
        return Err(dimension(format!("channel has {} entries, codebook has {} rows", h.len(), codebook.nrows())));
    }
    let mut best = None::<(usize, f64)>;
    for i in 0..codebook.ncols() {
        let col = codebook.column(i);
        let mut g = h.dotc(&col).norm_sqr();
        if normalize {
            let n = col.norm_squared();
            g = if n > 0.0 { g / n } else { 0.0 };
        }
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((i, g));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| invalid("codebook has no beams"))
}

/// Scores one user pair with the given codebooks and true channel `h`.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    budget: &LinkBudget,
    h: &CMatrix,
    h_tx: &CVector,
    h_rx: &CVector,
    f: &CMatrix,
    w: &CMatrix,
    f_cbf: &CMatrix,
    w_cbf: &CMatrix,
    trial: usize,
) -> Result<TrialResult> {
    let fi = f.column(beam_align(h_tx, f, false)?).into_owned();
    let wj = w.column(beam_align(h_rx, w, true)?).into_owned();
    let snr_tx = metrics::snr_tx(budget, h_tx, &fi)?;
    let snr_rx = metrics::snr_rx(budget, h_rx, &wj)?;
    let inr_rx = metrics::inr_rx(budget, h, &fi, &wj)?;
    let inr_tx = budget.inr_tx;
    let r_tx = metrics::spectral_efficiency(metrics::sinr(snr_tx, inr_tx));
    let r_rx = metrics::spectral_efficiency(metrics::sinr(snr_rx, inr_rx));

    let fc = f_cbf.column(beam_align(h_tx, f_cbf, false)?).into_owned();
    let wc = w_cbf.column(beam_align(h_rx, w_cbf, true)?).into_owned();
    let cap_tx = metrics::spectral_efficiency(metrics::snr_tx(budget, h_tx, &fc)?);
    let cap_rx = metrics::spectral_efficiency(metrics::snr_rx(budget, h_rx, &wc)?);
    Ok(TrialResult {
        trial,
        snr_tx_db: db(snr_tx),
        snr_rx_db: db(snr_rx),
        inr_rx_db: db(inr_rx),
        inr_tx_db: db(inr_tx),
        r_tx,
        r_rx,
        gamma_sum: metrics::gamma_sum(r_tx, r_rx, cap_tx, cap_rx)?,
    })
}

/// Builds the scenario and runs all its trials.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<TrialResult>> {
    Scenario::build(cfg)?.run()
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Named parameter values reported in the output row.
    pub params: Vec<(String, f64)>,
    pub config: ScenarioConfig,
}

/// Aggregate of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: Vec<(String, f64)>,
    pub mean_gamma: f64,
    pub median_gamma: f64,
    pub mean_inr_db: f64,
    pub n_trials: usize,
}

pub fn summarize(params: Vec<(String, f64)>, trials: &[TrialResult]) -> SweepRow {
    let n = trials.len();
    let gammas: Vec<f64> = trials.iter().map(|t| t.gamma_sum).collect();
    SweepRow {
        params,
        mean_gamma: mean(&gammas),
        median_gamma: median(&gammas),
        mean_inr_db: mean(&trials.iter().map(|t| t.inr_rx_db).collect::<Vec<_>>()),
        n_trials: n,
    }
}

/// Runs every point in order. Codebooks are designed once and reused by
/// later points that differ only in link budget or trial count.
pub fn sweep(points: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    let mut cache: Vec<(ScenarioConfig, Scenario)> = Vec::new();
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        let key = design_key(&p.config);
        let scenario = match cache.iter().find(|(k, _)| *k == key) {
            Some((_, s)) => s.rebudget(&p.config),
            None => {
                let s = Scenario::build(&p.config)?;
                cache.push((key, s.clone()));
                s
            }
        };
        rows.push(summarize(p.params.clone(), &scenario.run()?));
    }
    Ok(rows)
}

fn design_key(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut k = cfg.clone();
    k.n_trials = 1;
    k.snrbar_tx_db = 0.0;
    k.snrbar_rx_db = 0.0;
    k.inrbar_db = 0.0;
    k.inr_tx_db = 0.0;
    k.user_az_max = 0.0;
    k.user_el_max = 0.0;
    if !matches!(k.channel, ChannelKind::Mixture { .. }) {
        k.seed = 0;
    }
    k
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median; the mean of the two middle values for even lengths. NaN for empty input.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn small() -> ScenarioConfig {
        ScenarioConfig { rows: 4, cols: 4, n_trials: 40, ..ScenarioConfig::default() }
    }

    #[test]
    fn cbf_without_interference_is_exactly_one() {
        let cfg = ScenarioConfig { inrbar_db: f64::NEG_INFINITY, ..small() };
        for t in run_scenario(&cfg).unwrap() {
            assert_eq!(t.gamma_sum, 1.0);
            assert_eq!(t.inr_rx_db, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn deterministic_and_trial_local() {
        let cfg = small();
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        let s = Scenario::build(&cfg).unwrap();
        assert_eq!(s.run_trial(17).unwrap(), a[17]);
        let other = run_scenario(&ScenarioConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn beam_align_ties_and_errors() {
        let h = CVector::from_element(2, C64::new(1.0, 0.0));
        let cb = CMatrix::from_element(2, 3, C64::new(1.0, 0.0));
        assert_eq!(beam_align(&h, &cb, true).unwrap(), 0);
        assert!(beam_align(&CVector::zeros(3), &cb, false).is_err());
        assert!(beam_align(&h, &CMatrix::zeros(2, 0), false).is_err());
    }

    #[test]
    fn median_and_mean() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
    }

    #[test]
    fn sweep_rows_follow_points() {
        let pts: Vec<SweepPoint> = [30.0, 60.0]
            .iter()
            .map(|&v| SweepPoint {
                params: vec![("inrbar_db".into(), v)],
                config: ScenarioConfig { inrbar_db: v, n_trials: 10, ..small() },
            })
            .collect();
        let rows = sweep(&pts).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].params[0].1, 60.0);
        assert_eq!(rows[0].n_trials, 10);
        assert!(rows[1].mean_inr_db > rows[0].mean_inr_db);
    }

    #[test]
    fn given_codebook_shape_checked() {
        let cfg = ScenarioConfig {
            codebook: CodebookKind::Given { f: CMatrix::zeros(3, 2), w: CMatrix::zeros(3, 2) },
            ..small()
        };
        assert!(Scenario::build(&cfg).is_err());
    }
}
