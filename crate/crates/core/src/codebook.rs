//! Conventional and tapered beam codebooks and beam-pattern tools.
//!
//! A codebook is an `N x M` matrix whose column `i` is the quantized
//! beamformer steered toward the `i`-th direction of a coverage grid.
//!
//! ```
//! use lonestar::codebook::{beam_gain, cbf_codebook};
//! use lonestar::geometry::{coverage_region_grid, UpaGeometry};
//! use lonestar::quant::Quantizer;
//!
//! let geom = UpaGeometry::new(8, 8).unwrap();
//! let dirs = coverage_region_grid(-60.0, 60.0, 15.0, -30.0, 30.0, 15.0).unwrap();
//! let q = Quantizer::new(8, 8, 0.5).unwrap();
//! let f = cbf_codebook(&geom, &dirs, &q);
//! let a = geom.array_response(&dirs[0]);
//! let g_db = 10.0 * beam_gain(&a, &f.column(0).into_owned()).unwrap().log10();
//! assert!((g_db - 36.12).abs() < 0.01);
//! ```

use std::f64::consts::PI;

use crate::error::{dimension, invalid};
use crate::geometry::{Direction, UpaGeometry};
use crate::quant::Quantizer;
use crate::{CMatrix, CVector, Result};

/// Default number of nearly-constant sidelobes in the Taylor window.
pub const DEFAULT_TAYLOR_NBAR: usize = 4;

/// Conjugate beamforming: `f_i = P(a(θ_i))`.
pub fn cbf_codebook(geom: &UpaGeometry, dirs: &[Direction], quant: &Quantizer) -> CMatrix {
    quant.project_matrix(&geom.array_response_matrix(dirs))
}

/// Taylor-tapered conjugate beamforming: `f_i = P(a(θ_i) ⊙ v)`.
///
/// `v` is the outer product of row and column Taylor windows, each scaled to
/// unit peak.
pub fn taylor_codebook(
    geom: &UpaGeometry,
    dirs: &[Direction],
    quant: &Quantizer,
    sll_db: f64,
    nbar: usize,
) -> Result<CMatrix> {
    let taper = taylor_taper(geom, sll_db, nbar)?;
    let mut a = geom.array_response_matrix(dirs);
    for mut col in a.column_iter_mut() {
        col.component_mul_assign(&taper);
    }
    Ok(quant.project_matrix(&a))
}

/// Separable planar taper for `geom`, in element order.
pub fn taylor_taper(geom: &UpaGeometry, sll_db: f64, nbar: usize) -> Result<CVector> {
    let vr = taylor_window(geom.rows(), sll_db, nbar)?;
    let vc = taylor_window(geom.cols(), sll_db, nbar)?;
    Ok(CVector::from_iterator(
        geom.num_elements(),
        vr.iter().flat_map(|r| vc.iter().map(move |c| (r * c).into())),
    ))
}

/// Taylor window of length `n` with sidelobe level `sll_db` (positive dB) and
/// `nbar` near-in sidelobes, scaled to unit peak.
pub fn taylor_window(n: usize, sll_db: f64, nbar: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("window length must be positive"));
    }
    if !(sll_db.is_finite() && sll_db > 0.0) {
        return Err(invalid(format!("sidelobe level must be positive dB, got {sll_db}")));
    }
    if nbar < 1 {
        return Err(invalid("nbar must be at least 1"));
    }
    let b = 10f64.powf(sll_db / 20.0);
    let a = b.acosh() / PI;
    let s2 = (nbar * nbar) as f64 / (a * a + (nbar as f64 - 0.5).powi(2));
    let coeffs: Vec<f64> = (1..nbar)
        .map(|m| {
            let mf = m as f64;
            let num: f64 = (1..nbar)
                .map(|j| 1.0 - mf * mf / s2 / (a * a + (j as f64 - 0.5).powi(2)))
                .product();
            let den: f64 = (1..nbar)
                .filter(|&j| j != m)
                .map(|j| 1.0 - mf * mf / (j * j) as f64)
                .product();
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            sign * num / (2.0 * den)
        })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|k| {
            let x = (k as f64 - n as f64 / 2.0 + 0.5) / n as f64;
            1.0 + 2.0 * coeffs.iter().enumerate().map(|(i, c)| c * (2.0 * PI * (i + 1) as f64 * x).cos()).sum::<f64>()
        })
        .collect();
    let peak = w.iter().cloned().fold(f64::MIN, f64::max);
    Ok(w.into_iter().map(|v| v / peak).collect())
}

/// `|a* f|²`.
pub fn beam_gain(a: &CVector, f: &CVector) -> Result<f64> {
    if a.len() != f.len() {
        return Err(dimension(format!("response has {} entries, beam has {}", a.len(), f.len())));
    }
    Ok(a.dotc(f).norm_sqr())
}

/// Mean normalized squared deviation of beam gain magnitude from `N`:
/// `(1/M) Σ_i (N - |a_i* f_i|)² / N²`.
pub fn coverage_variance(geom: &UpaGeometry, dirs: &[Direction], f: &CMatrix) -> Result<f64> {
    let n = geom.num_elements();
    if f.nrows() != n || f.ncols() != dirs.len() {
        return Err(dimension(format!(
            "codebook is {}x{}, expected {}x{}",
            f.nrows(),
            f.ncols(),
            n,
            dirs.len()
        )));
    }
    if dirs.is_empty() {
        return Err(invalid("coverage variance of an empty codebook"));
    }
    let nf = n as f64;
    let total: f64 = dirs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let g = geom.array_response(d).dotc(&f.column(i)).norm();
            (nf - g).powi(2)
        })
        .sum();
    Ok(total / (dirs.len() as f64 * nf * nf))
}

/// Which angle a pattern cut sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    /// Sweep azimuth over the front hemisphere [-90, 90] at fixed elevation.
    /// Isotropic elements make the back hemisphere a mirror image.
    Azimuth,
    /// Sweep elevation over [-90, 90] at fixed azimuth.
    Elevation,
}

/// One sample of a beam pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternPoint {
    pub angle_deg: f64,
    /// `|a(θ)* f|²`.
    pub gain: f64,
}

pub fn beam_pattern_cut(
    geom: &UpaGeometry,
    beam: &CVector,
    cut: Cut,
    fixed_angle_deg: f64,
    step_deg: f64,
) -> Result<Vec<PatternPoint>> {
    if beam.len() != geom.num_elements() {
        return Err(dimension(format!("beam has {} entries, array has {}", beam.len(), geom.num_elements())));
    }
    if !(step_deg.is_finite() && step_deg > 0.0) {
        return Err(invalid(format!("pattern step must be positive, got {step_deg}")));
    }
    let (lo, hi) = (-90.0, 90.0);
    let n = ((hi - lo) / step_deg + 1e-9).floor() as usize + 1;
    (0..n)
        .map(|k| {
            let ang = lo + k as f64 * step_deg;
            let dir = match cut {
                Cut::Azimuth => Direction::new(ang, fixed_angle_deg)?,
                Cut::Elevation => Direction::new(fixed_angle_deg, ang)?,
            };
            Ok(PatternPoint { angle_deg: ang, gain: beam_gain(&geom.array_response(&dir), beam)? })
        })
        .collect()
}

/// Peak sidelobe level of a sampled pattern in dB relative to its peak.
///
/// The main lobe is the region around the global maximum bounded by the
/// nearest local minimum on each side. Returns `-inf` when there is nothing
/// outside the main lobe.
pub fn peak_sidelobe_level_db(pattern: &[PatternPoint]) -> f64 {
    if pattern.is_empty() {
        return f64::NEG_INFINITY;
    }
    let g: Vec<f64> = pattern.iter().map(|p| p.gain).collect();
    let (ipk, &peak) = g
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let mut lo = ipk;
    while lo > 0 && g[lo - 1] <= g[lo] {
        lo -= 1;
    }
    let mut hi = ipk;
    while hi + 1 < g.len() && g[hi + 1] <= g[hi] {
        hi += 1;
    }
    let side = g[..lo].iter().chain(g[hi + 1..].iter()).cloned().fold(f64::NEG_INFINITY, f64::max);
    if side == f64::NEG_INFINITY || peak <= 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (side / peak).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::coverage_region_grid;
    use crate::C64;

    #[test]
    fn taylor_matches_reference_values() {
        // Reference: scipy.signal.windows.taylor(8, nbar=4, sll=25), peak-normalized.
        let want = [0.40269487, 0.59167916, 0.84606765, 1.0, 1.0, 0.84606765, 0.59167916, 0.40269487];
        let w = taylor_window(8, 25.0, 4).unwrap();
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        let w5 = taylor_window(5, 30.0, 3).unwrap();
        let want5 = [0.34040436, 0.77681612, 1.0, 0.77681612, 0.34040436];
        for (a, b) in w5.iter().zip(want5) {
            assert!((a - b).abs() < 1e-7);
        }
        assert_eq!(taylor_window(1, 25.0, 4).unwrap(), vec![1.0]);
    }

    #[test]
    fn taylor_rejects_bad_parameters() {
        assert!(taylor_window(0, 25.0, 4).is_err());
        assert!(taylor_window(8, -3.0, 4).is_err());
        assert!(taylor_window(8, 25.0, 0).is_err());
    }

    #[test]
    fn coverage_variance_toy() {
        // Two beams with gain magnitudes N and N/2.
        let geom = UpaGeometry::new(2, 2).unwrap();
        let dirs = [Direction::broadside(), Direction::broadside()];
        let mut f = CMatrix::from_element(4, 2, C64::new(1.0, 0.0));
        f.column_mut(1).fill(C64::new(0.5, 0.0));
        assert!((coverage_variance(&geom, &dirs, &f).unwrap() - 0.125).abs() < 1e-15);
        assert!(coverage_variance(&geom, &dirs[..1], &f).is_err());
    }

    #[test]
    fn gain_dimension_error() {
        assert!(beam_gain(&CVector::zeros(3), &CVector::zeros(4)).is_err());
    }

    #[test]
    fn unquantized_cbf_has_full_gain_and_zero_variance() {
        let geom = UpaGeometry::new(4, 4).unwrap();
        let dirs = coverage_region_grid(-45.0, 45.0, 45.0, 0.0, 0.0, 1.0).unwrap();
        let q = Quantizer::new(16, 0, 0.5).unwrap();
        let f = cbf_codebook(&geom, &dirs, &q);
        assert!(coverage_variance(&geom, &dirs, &f).unwrap() < 1e-8);
    }

    #[test]
    fn psl_of_uniform_line_array() {
        // Uniform 8-element line: first sidelobe near -12.8 dB.
        let geom = UpaGeometry::new(1, 8).unwrap();
        let beam = geom.array_response(&Direction::broadside());
        let pat = beam_pattern_cut(&geom, &beam, Cut::Azimuth, 0.0, 0.1).unwrap();
        let psl = peak_sidelobe_level_db(&pat);
        assert!((psl + 12.8).abs() < 0.3, "psl {psl}");
    }

    #[test]
    fn pattern_cut_sizes() {
        let geom = UpaGeometry::new(2, 2).unwrap();
        let beam = geom.array_response(&Direction::broadside());
        assert_eq!(beam_pattern_cut(&geom, &beam, Cut::Azimuth, 0.0, 0.5).unwrap().len(), 361);
        assert_eq!(beam_pattern_cut(&geom, &beam, Cut::Elevation, 0.0, 1.0).unwrap().len(), 181);
        assert!(beam_pattern_cut(&geom, &CVector::zeros(3), Cut::Azimuth, 0.0, 1.0).is_err());
    }
}
