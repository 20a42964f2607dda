//! Digitally controlled phase shifters and attenuators.
//!
//! Each antenna weight is `A e^{jφ}` with `A` drawn from `2^b_amp` attenuation
//! levels spaced `δ` dB apart (starting at unity) and `φ` from `2^b_phs`
//! uniformly spaced phases starting at `-π`.
//!
//! Projection is per coordinate: the nearest amplitude to `min(|w|, 1)` and the
//! nearest phase to `arg w` on the circle, ties going to the lower index.
//!
//! ```
//! use lonestar::quant::Quantizer;
//! use lonestar::C64;
//!
//! let q = Quantizer::new(8, 8, 0.5).unwrap();
//! let z = q.project(C64::from_polar(0.95, 0.01));
//! assert!((z.norm() - 10f64.powf(-0.5 / 20.0)).abs() < 1e-12);
//! assert!(z.arg().abs() < 1e-12);
//! ```

use std::f64::consts::PI;

use crate::error::invalid;
use crate::{CMatrix, Result, C64};

const MAX_BITS: u32 = 16;

/// Phase and amplitude resolution of the analog beamforming network.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    phase_bits: u32,
    amp_bits: u32,
    atten_step_db: f64,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl Quantizer {
    /// `amp_bits` may be zero (phase-only control); `phase_bits` must be at least one.
    pub fn new(phase_bits: u32, amp_bits: u32, atten_step_db: f64) -> Result<Self> {
        if phase_bits == 0 || phase_bits > MAX_BITS {
            return Err(invalid(format!("phase bits must be in 1..={MAX_BITS}, got {phase_bits}")));
        }
        if amp_bits > MAX_BITS {
            return Err(invalid(format!("amplitude bits must be in 0..={MAX_BITS}, got {amp_bits}")));
        }
        if !(atten_step_db.is_finite() && atten_step_db > 0.0) {
            return Err(invalid(format!("attenuation step must be positive, got {atten_step_db}")));
        }
        let amplitudes = (0..1usize << amp_bits)
            .map(|i| 10f64.powf(-atten_step_db * i as f64 / 20.0))
            .collect();
        let n_ph = 1usize << phase_bits;
        let phases = (0..n_ph).map(|i| i as f64 * 2.0 * PI / n_ph as f64 - PI).collect();
        Ok(Self { phase_bits, amp_bits, atten_step_db, amplitudes, phases })
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    pub fn amp_bits(&self) -> u32 {
        self.amp_bits
    }

    pub fn atten_step_db(&self) -> f64 {
        self.atten_step_db
    }

    /// Amplitude levels, descending from 1.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Phase levels, ascending from `-π`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitude_index(&self, magnitude: f64) -> usize {
        let m = magnitude.min(1.0);
        // Descending list: first index whose level is <= m.
        let k = self.amplitudes.partition_point(|&a| a > m);
        if k == 0 {
            return 0;
        }
        if k == self.amplitudes.len() {
            return k - 1;
        }
        let above = self.amplitudes[k - 1] - m;
        let below = m - self.amplitudes[k];
        if below < above {
            k
        } else {
            k - 1
        }
    }

    pub fn phase_index(&self, phase: f64) -> usize {
        let n = self.phases.len();
        let step = 2.0 * PI / n as f64;
        let t = (phase + PI).rem_euclid(2.0 * PI) / step;
        let lo = t.floor();
        let d_lo = t - lo;
        let d_hi = lo + 1.0 - t;
        let lo_i = (lo as usize) % n;
        let hi_i = (lo_i + 1) % n;
        if d_hi < d_lo || (d_hi == d_lo && hi_i < lo_i) {
            hi_i
        } else {
            lo_i
        }
    }

    /// Nearest codepoint to `w`; `arg 0` is taken as 0.
    pub fn project(&self, w: C64) -> C64 {
        let mag = w.norm();
        let phase = if mag == 0.0 { 0.0 } else { w.arg() };
        C64::from_polar(self.amplitudes[self.amplitude_index(mag)], self.phases[self.phase_index(phase)])
    }

    pub fn project_matrix(&self, m: &CMatrix) -> CMatrix {
        m.map(|z| self.project(z))
    }

    /// Whether `z` is a codepoint to within `tol` in amplitude and phase.
    pub fn is_member(&self, z: C64, tol: f64) -> bool {
        let mag = z.norm();
        let a_ok = self.amplitudes.iter().any(|a| (a - mag).abs() <= tol);
        let p_ok = self.phases.iter().any(|p| circular_distance(*p, z.arg()) <= tol);
        a_ok && p_ok
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_amp_bit_levels() {
        let q = Quantizer::new(4, 1, 0.5).unwrap();
        assert_eq!(q.amplitudes().len(), 2);
        assert!((q.amplitudes()[1] - 0.944_061).abs() < 1e-6);
    }

    #[test]
    fn phase_levels() {
        let q = Quantizer::new(2, 0, 0.5).unwrap();
        let want = [-PI, -PI / 2.0, 0.0, PI / 2.0];
        for (p, w) in q.phases().iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_maps_to_smallest_amplitude_zero_phase() {
        let q = Quantizer::new(3, 2, 1.0).unwrap();
        let z = q.project(C64::new(0.0, 0.0));
        assert!((z.norm() - q.amplitudes()[3]).abs() < 1e-15);
        assert!(z.arg().abs() < 1e-15);
    }

    #[test]
    fn large_magnitude_clamps_to_unity() {
        let q = Quantizer::new(3, 2, 1.0).unwrap();
        assert!((q.project(C64::new(0.0, 5.0)).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let q = Quantizer::new(2, 1, 6.0).unwrap();
        let mid = (q.amplitudes()[0] + q.amplitudes()[1]) / 2.0;
        assert_eq!(q.amplitude_index(mid), 0);
        // Halfway between -π/2 (index 1) and 0 (index 2).
        assert_eq!(q.phase_index(-PI / 4.0), 1);
        // Halfway between π/2 (index 3) and π ≡ -π (index 0).
        assert_eq!(q.phase_index(3.0 * PI / 4.0), 0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Quantizer::new(0, 1, 0.5).is_err());
        assert!(Quantizer::new(17, 1, 0.5).is_err());
        assert!(Quantizer::new(4, 1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_member_and_idempotent(re in -2.0f64..2.0, im in -2.0f64..2.0, pb in 1u32..9, ab in 0u32..9) {
            let q = Quantizer::new(pb, ab, 0.5).unwrap();
            let z = q.project(C64::new(re, im));
            prop_assert!(q.is_member(z, 1e-12));
            let zz = q.project(z);
            prop_assert!((zz - z).norm() < 1e-12);
        }

        #[test]
        fn projection_bounded(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let q = Quantizer::new(6, 6, 0.25).unwrap();
            prop_assert!(q.project(C64::new(re, im)).norm() <= 1.0 + 1e-15);
        }
    }
}
