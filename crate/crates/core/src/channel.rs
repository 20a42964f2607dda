//! Self-interference channel models.
//!
//! All channels are `N_r x N_t` (receive rows, transmit columns) and scaled so
//! that `‖H‖_F² = N_t N_r`.
//!
//! ```
//! use lonestar::channel::{spherical_wave_channel, ArrayPlacement};
//! use lonestar::geometry::UpaGeometry;
//!
//! let g = UpaGeometry::new(4, 4).unwrap();
//! let h = spherical_wave_channel(&g, &g, &ArrayPlacement::stacked(&g)).unwrap();
//! assert!((h.norm_squared() - 256.0).abs() < 1e-9);
//! ```

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::invalid;
use crate::geometry::UpaGeometry;
use crate::{CMatrix, Result, C64};

/// Offset of the receive array centroid from the transmit array centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayPlacement {
    pub rx_offset_m: [f64; 3],
}

impl ArrayPlacement {
    /// Coplanar arrays, receive array ten wavelengths above the transmit array.
    pub fn stacked(geom: &UpaGeometry) -> Self {
        Self { rx_offset_m: [0.0, 0.0, 10.0 * geom.wavelength()] }
    }
}

/// Near-field line-of-sight channel between every element pair.
///
/// Entry `(m, n)` is `exp(-j 2π r / λ) / r` with `r` the distance from
/// transmit element `n` to receive element `m`, before normalization.
pub fn spherical_wave_channel(tx: &UpaGeometry, rx: &UpaGeometry, placement: &ArrayPlacement) -> Result<CMatrix> {
    if (tx.wavelength() - rx.wavelength()).abs() > 1e-12 * tx.wavelength() {
        return Err(invalid("transmit and receive arrays use different carriers"));
    }
    let lambda = tx.wavelength();
    let pt = tx.element_positions();
    let pr = rx.element_positions();
    let off = placement.rx_offset_m;
    let mut h = CMatrix::zeros(pr.len(), pt.len());
    for (m, r_pos) in pr.iter().enumerate() {
        for (n, t_pos) in pt.iter().enumerate() {
            let d = [r_pos[0] + off[0] - t_pos[0], r_pos[1] + off[1] - t_pos[1], r_pos[2] + off[2] - t_pos[2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if r < 1e-9 * lambda {
                return Err(invalid(format!("transmit element {n} and receive element {m} coincide")));
            }
            h[(m, n)] = C64::from_polar(lambda / r, -2.0 * PI * r / lambda);
        }
    }
    normalize_frobenius(&mut h);
    Ok(h)
}

/// Spherical-wave channel plus i.i.d. `CN(0, ζ²)` scattering, renormalized.
pub fn rayleigh_mixture<R: Rng + ?Sized>(h_sw: &CMatrix, zeta_sq: f64, rng: &mut R) -> Result<CMatrix> {
    if !(zeta_sq.is_finite() && zeta_sq >= 0.0) {
        return Err(invalid(format!("scattering variance must be non-negative, got {zeta_sq}")));
    }
    let mut h = h_sw + complex_gaussian(h_sw.nrows(), h_sw.ncols(), zeta_sq, rng);
    normalize_frobenius(&mut h);
    Ok(h)
}

/// Realized channel `H̄ + Δ` with `Δ` i.i.d. `CN(0, ε²)`.
///
/// `ε²` is the total per-entry variance; real and imaginary parts each get `ε²/2`.
pub fn draw_true_channel<R: Rng + ?Sized>(h_bar: &CMatrix, eps_sq: f64, rng: &mut R) -> Result<CMatrix> {
    if !(eps_sq.is_finite() && eps_sq >= 0.0) {
        return Err(invalid(format!("estimation error variance must be non-negative, got {eps_sq}")));
    }
    Ok(h_bar + complex_gaussian(h_bar.nrows(), h_bar.ncols(), eps_sq, rng))
}

/// `rows x cols` matrix of i.i.d. circularly-symmetric Gaussians with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> CMatrix {
    let s = (var / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// Scales `h` in place so that `‖h‖_F² = rows * cols`.
pub fn normalize_frobenius(h: &mut CMatrix) {
    let f = h.norm();
    if f > 0.0 {
        let target = ((h.nrows() * h.ncols()) as f64).sqrt();
        *h *= C64::new(target / f, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coincident_elements_rejected() {
        let g = UpaGeometry::new(2, 2).unwrap();
        let p = ArrayPlacement { rx_offset_m: [0.0; 3] };
        assert!(spherical_wave_channel(&g, &g, &p).is_err());
    }

    #[test]
    fn single_pair_is_unit_modulus() {
        let g = UpaGeometry::new(1, 1).unwrap();
        let h = spherical_wave_channel(&g, &g, &ArrayPlacement::stacked(&g)).unwrap();
        assert!((h[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spherical_entries_follow_distance() {
        // Ratio of two entries only depends on the two distances.
        let g = UpaGeometry::new(2, 1).unwrap();
        let lam = g.wavelength();
        let h = spherical_wave_channel(&g, &g, &ArrayPlacement::stacked(&g)).unwrap();
        // Element 0 at z=-λ/4, element 1 at z=+λ/4; offset 10λ.
        let r00 = 10.0 * lam;
        let r01 = 9.5 * lam;
        let want = C64::from_polar(r00 / r01, -2.0 * PI * (r01 - r00) / lam);
        assert!((h[(0, 1)] / h[(0, 0)] - want).norm() < 1e-9);
    }

    #[test]
    fn mixture_is_normalized_and_zero_scatter_is_identity() {
        let g = UpaGeometry::new(3, 3).unwrap();
        let h = spherical_wave_channel(&g, &g, &ArrayPlacement::stacked(&g)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = rayleigh_mixture(&h, 0.5, &mut rng).unwrap();
        assert!((m.norm_squared() - 81.0).abs() < 1e-9);
        let same = rayleigh_mixture(&h, 0.0, &mut rng).unwrap();
        assert!((same - &h).norm() < 1e-9);
    }

    #[test]
    fn error_variance_is_total_per_entry() {
        let h = CMatrix::zeros(50, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = draw_true_channel(&h, 0.2, &mut rng).unwrap();
        let var = d.norm_squared() / 2500.0;
        let re_var = d.iter().map(|z| z.re * z.re).sum::<f64>() / 2500.0;
        assert!((var - 0.2).abs() < 0.02, "var {var}");
        assert!((re_var - 0.1).abs() < 0.01, "re var {re_var}");
    }

    #[test]
    fn negative_variances_rejected() {
        let h = CMatrix::zeros(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_true_channel(&h, -1.0, &mut rng).is_err());
        assert!(rayleigh_mixture(&h, -1.0, &mut rng).is_err());
    }
}
