//! Uniform planar arrays, steering directions and coverage grids.
//!
//! Arrays lie in the y-z plane with broadside along +x. Columns run along y
//! (horizontal), rows along z (vertical), and element `n = row * cols + col`.
//! Positions are measured from the array centroid, so the response to a
//! direction and to its mirror `(-az, -el)` are complex conjugates.
//!
//! A direction with azimuth `az` and elevation `el` has unit vector
//! `(cos el cos az, cos el sin az, sin el)`, and the response entry for
//! element position `p` is `exp(+j 2π/λ p·u)`.
//!
//! ```
//! use lonestar::geometry::{Direction, UpaGeometry};
//!
//! let geom = UpaGeometry::new(1, 2).unwrap();
//! let a = geom.array_response(&Direction::new(30.0, 0.0).unwrap());
//! // Half-wavelength pair at 30 degrees: a quarter-turn between neighbours.
//! let rel = a[1] / a[0];
//! assert!((rel.re).abs() < 1e-12 && (rel.im - 1.0).abs() < 1e-12);
//! ```

use std::str::FromStr;

use crate::error::invalid;
use crate::{CMatrix, CVector, Result, C64};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default carrier: 28 GHz.
pub const DEFAULT_CARRIER_HZ: f64 = 28.0e9;

/// A steering direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Direction {
    /// Azimuth must lie in [-180, 180] and elevation in [-90, 90].
    pub fn new(az_deg: f64, el_deg: f64) -> Result<Self> {
        if !(-180.0..=180.0).contains(&az_deg) {
            return Err(invalid(format!("azimuth {az_deg} outside [-180, 180]")));
        }
        if !(-90.0..=90.0).contains(&el_deg) {
            return Err(invalid(format!("elevation {el_deg} outside [-90, 90]")));
        }
        Ok(Self { az_deg, el_deg })
    }

    pub fn broadside() -> Self {
        Self { az_deg: 0.0, el_deg: 0.0 }
    }

    /// Unit vector `(x, y, z)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (az, el) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
    }
}

/// Uniform planar array.
#[derive(Debug, Clone, PartialEq)]
pub struct UpaGeometry {
    rows: usize,
    cols: usize,
    spacing_wavelengths: f64,
    carrier_wavelength_m: f64,
}

impl UpaGeometry {
    /// Half-wavelength spacing at the default carrier.
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Self::with_spacing(rows, cols, 0.5, SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ)
    }

    pub fn with_spacing(
        rows: usize,
        cols: usize,
        spacing_wavelengths: f64,
        carrier_wavelength_m: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("array must have at least one element, got {rows}x{cols}")));
        }
        if !(spacing_wavelengths.is_finite() && spacing_wavelengths > 0.0) {
            return Err(invalid(format!("element spacing must be positive, got {spacing_wavelengths}")));
        }
        if !(carrier_wavelength_m.is_finite() && carrier_wavelength_m > 0.0) {
            return Err(invalid(format!("carrier wavelength must be positive, got {carrier_wavelength_m}")));
        }
        Ok(Self { rows, cols, spacing_wavelengths, carrier_wavelength_m })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    pub fn wavelength(&self) -> f64 {
        self.carrier_wavelength_m
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Element positions in metres relative to the centroid, in element order.
    pub fn element_positions(&self) -> Vec<[f64; 3]> {
        let d = self.spacing_wavelengths * self.carrier_wavelength_m;
        let r0 = (self.rows as f64 - 1.0) / 2.0;
        let c0 = (self.cols as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.num_elements());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push([0.0, (c as f64 - c0) * d, (r as f64 - r0) * d]);
            }
        }
        out
    }

    /// Response vector with unit-modulus entries.
    pub fn array_response(&self, dir: &Direction) -> CVector {
        let u = dir.unit_vector();
        let k = 2.0 * std::f64::consts::PI / self.carrier_wavelength_m;
        CVector::from_iterator(
            self.num_elements(),
            self.element_positions().iter().map(|p| C64::from_polar(1.0, k * (p[1] * u[1] + p[2] * u[2]))),
        )
    }

    /// `N x M` matrix whose columns are the responses to `dirs`.
    pub fn array_response_matrix(&self, dirs: &[Direction]) -> CMatrix {
        let mut m = CMatrix::zeros(self.num_elements(), dirs.len());
        for (j, d) in dirs.iter().enumerate() {
            m.set_column(j, &self.array_response(d));
        }
        m
    }
}

/// Inclusive arithmetic range `start:step:stop` in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl AngleRange {
    pub fn new(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(invalid("angle range bounds must be finite"));
        }
        if start > stop {
            return Err(invalid(format!("range start {start} exceeds stop {stop}")));
        }
        if step <= 0.0 {
            return Err(invalid(format!("range step must be positive, got {step}")));
        }
        Ok(Self { start, step, stop })
    }

    /// Points `start + k*step` up to and including `stop` (with a small tolerance).
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for AngleRange {
    type Err = crate::Error;

    /// Parses `start:step:stop` or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| invalid(format!("bad number '{t}' in range '{s}'")));
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Self::new(v, 1.0, v)
            }
            [a, b, c] => Self::new(num(a)?, num(b)?, num(c)?),
            _ => Err(invalid(format!("range '{s}' is not start:step:stop"))),
        }
    }
}

/// Row-major grid of directions, elevation in the outer loop.
pub fn coverage_region_grid(
    az_start: f64,
    az_stop: f64,
    az_step: f64,
    el_start: f64,
    el_stop: f64,
    el_step: f64,
) -> Result<Vec<Direction>> {
    let az = AngleRange::new(az_start, az_step, az_stop)?;
    let el = AngleRange::new(el_start, el_step, el_stop)?;
    grid_from_ranges(&az, &el)
}

pub fn grid_from_ranges(az: &AngleRange, el: &AngleRange) -> Result<Vec<Direction>> {
    let mut out = Vec::new();
    for e in el.values() {
        for a in az.values() {
            out.push(Direction::new(a, e)?);
        }
    }
    Ok(out)
}
