//! Link quality metrics of a full-duplex base station.
//!
//! The base station transmits to one user with beam `f` over channel `h_tx`
//! and receives from another with beam `w` over `h_rx`, while its own
//! transmission leaks back through the self-interference channel `H`.
//! Each beam is normalized by its array size (transmit) or its own norm
//! (receive), so every ratio below is scale-free in the codebook.
//!
//! ```
//! use lonestar::metrics::{from_db, gamma_sum, spectral_efficiency, LinkBudget};
//!
//! let b = LinkBudget::from_targets(10.0, 10.0, f64::NEG_INFINITY, f64::NEG_INFINITY, 64, 64);
//! assert_eq!(b.g_si_sq, 0.0);
//! let c = spectral_efficiency(from_db(10.0));
//! assert!((gamma_sum(c, c, c, c).unwrap() - 1.0).abs() < 1e-15);
//! ```

use nalgebra::DMatrix;

use crate::error::{dimension, invalid};
use crate::{CMatrix, CVector, Result};

/// `10 log10(x)`.
pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`db`].
pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Transmit powers, noise powers and large-scale gains, all linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Base station transmit power.
    pub p_bs: f64,
    /// Uplink user transmit power.
    pub p_ue: f64,
    /// Noise power at the base station receiver.
    pub p_noise_bs: f64,
    /// Noise power at the downlink user.
    pub p_noise_ue: f64,
    /// Downlink large-scale gain `G_tx²`.
    pub g_tx_sq: f64,
    /// Uplink large-scale gain `G_rx²`.
    pub g_rx_sq: f64,
    /// Self-interference large-scale gain `G²`.
    pub g_si_sq: f64,
    /// Cross-link interference at the downlink user (uplink user leaking into it).
    pub inr_tx: f64,
}

impl LinkBudget {
    /// Budget with unit powers whose gains hit the requested maximum SNRs and
    /// maximum INR (all in dB) for `nt x nr` arrays. `-inf` disables a term.
    pub fn from_targets(snrbar_tx_db: f64, snrbar_rx_db: f64, inrbar_db: f64, inr_tx_db: f64, nt: usize, nr: usize) -> Self {
        let (nt, nr) = (nt as f64, nr as f64);
        Self {
            p_bs: 1.0,
            p_ue: 1.0,
            p_noise_bs: 1.0,
            p_noise_ue: 1.0,
            g_tx_sq: from_db(snrbar_tx_db) / nt,
            g_rx_sq: from_db(snrbar_rx_db) / nr,
            g_si_sq: from_db(inrbar_db) / (nt * nr),
            inr_tx: from_db(inr_tx_db),
        }
    }
}

/// Downlink SNR `P_bs G_tx² |h* f|² / (N_t P_noise_ue)`.
pub fn snr_tx(b: &LinkBudget, h_tx: &CVector, f: &CVector) -> Result<f64> {
    same_len(h_tx, f, "downlink channel", "transmit beam")?;
    Ok(b.p_bs * b.g_tx_sq * h_tx.dotc(f).norm_sqr() / (f.len() as f64 * b.p_noise_ue))
}

/// Uplink SNR `P_ue G_rx² |w* h|² / (‖w‖² P_noise_bs)`.
pub fn snr_rx(b: &LinkBudget, h_rx: &CVector, w: &CVector) -> Result<f64> {
    same_len(h_rx, w, "uplink channel", "receive beam")?;
    let wn = nonzero_norm_sq(w)?;
    Ok(b.p_ue * b.g_rx_sq * w.dotc(h_rx).norm_sqr() / (wn * b.p_noise_bs))
}

/// Self-interference INR `P_bs G² |w* H f|² / (N_t ‖w‖² P_noise_bs)`.
pub fn inr_rx(b: &LinkBudget, h: &CMatrix, f: &CVector, w: &CVector) -> Result<f64> {
    if h.shape() != (w.len(), f.len()) {
        return Err(dimension(format!(
            "channel is {}x{} but beams have {} (receive) and {} (transmit) entries",
            h.nrows(),
            h.ncols(),
            w.len(),
            f.len()
        )));
    }
    let wn = nonzero_norm_sq(w)?;
    Ok(b.p_bs * b.g_si_sq * w.dotc(&(h * f)).norm_sqr() / (f.len() as f64 * wn * b.p_noise_bs))
}

/// Largest downlink SNR over unit-modulus beams: `P_bs G_tx² N_t / P_noise_ue`.
pub fn snrbar_tx(b: &LinkBudget, nt: usize) -> f64 {
    b.p_bs * b.g_tx_sq * nt as f64 / b.p_noise_ue
}

/// Largest uplink SNR over unit-modulus beams: `P_ue G_rx² N_r / P_noise_bs`.
pub fn snrbar_rx(b: &LinkBudget, nr: usize) -> f64 {
    b.p_ue * b.g_rx_sq * nr as f64 / b.p_noise_bs
}

/// Largest self-interference INR: `P_bs G² N_t N_r / P_noise_bs`.
pub fn inrbar(b: &LinkBudget, nt: usize, nr: usize) -> f64 {
    b.p_bs * b.g_si_sq * (nt * nr) as f64 / b.p_noise_bs
}

pub fn sinr(snr: f64, inr: f64) -> f64 {
    snr / (1.0 + inr)
}

/// `log2(1 + sinr)` in bps/Hz.
pub fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Full-duplex sum rate over the sum of interference-free codebook capacities.
pub fn gamma_sum(r_tx: f64, r_rx: f64, cap_tx: f64, cap_rx: f64) -> Result<f64> {
    let den = cap_tx + cap_rx;
    if den <= 0.0 {
        return Err(invalid("sum of codebook capacities is zero"));
    }
    Ok((r_tx + r_rx) / den)
}

/// INR of every beam pair, `M_rx x M_tx`.
pub fn inr_matrix(b: &LinkBudget, h: &CMatrix, f: &CMatrix, w: &CMatrix) -> Result<DMatrix<f64>> {
    if h.shape() != (w.nrows(), f.nrows()) {
        return Err(dimension(format!(
            "channel is {}x{} but codebooks have {} (receive) and {} (transmit) rows",
            h.nrows(),
            h.ncols(),
            w.nrows(),
            f.nrows()
        )));
    }
    let coupling = w.adjoint() * h * f;
    let nt = f.nrows() as f64;
    let mut out = DMatrix::zeros(w.ncols(), f.ncols());
    for j in 0..w.ncols() {
        let wn = nonzero_norm_sq(&w.column(j).into_owned())?;
        for i in 0..f.ncols() {
            out[(j, i)] = b.p_bs * b.g_si_sq * coupling[(j, i)].norm_sqr() / (nt * wn * b.p_noise_bs);
        }
    }
    Ok(out)
}

fn same_len(a: &CVector, b: &CVector, an: &str, bn: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(dimension(format!("{an} has {} entries, {bn} has {}", a.len(), b.len())));
    }
    Ok(())
}

fn nonzero_norm_sq(w: &CVector) -> Result<f64> {
    let n = w.norm_squared();
    if n == 0.0 {
        return Err(invalid("receive beam is all zeros"));
    }
    Ok(n)
}
