//! Scalar Laguerre-Gaussian modes of radial order zero.
//!
//! Fields are evaluated in the waist plane with the dimensionless profile
//!
//! ```text
//! LG_m(r, th) = sqrt(2 / (pi |m|!)) * exp(-r^2 / w0^2) * (sqrt(2) r / w0)^|m| * exp(i m th)
//! ```
//!
//! so a mode's handedness lives entirely in the azimuthal factor. Discrete
//! fields sampled on a square grid can be renormalized to unit L2 norm, which
//! makes overlaps waist-independent and turns the mode family into an
//! orthonormal set to quadrature accuracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Azimuthal index of a Laguerre-Gaussian mode; the radial order is fixed at
/// zero throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: i32,
}

impl ModeIndex {
    pub fn new(m: i32) -> Self {
        Self { m }
    }
}

/// Beam parameters for one photon arm.
///
/// `w0_mm` is the waist, `lambda_nm` the wavelength, and `z_mm` the
/// propagation distance at which projective devices act. Only the Gouy phase
/// depends on `z`; transverse profiles are evaluated at the waist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub w0_mm: f64,
    pub lambda_nm: f64,
    pub z_mm: f64,
}

impl BeamGeometry {
    /// Rayleigh range in millimetres: `pi w0^2 / lambda`.
    pub fn rayleigh_range_mm(&self) -> f64 {
        std::f64::consts::PI * self.w0_mm * self.w0_mm * 1.0e6 / self.lambda_nm
    }

    /// `arctan(z / z_R)`, the single-mode Gouy angle at `z`.
    pub fn gouy_angle(&self) -> f64 {
        (self.z_mm / self.rayleigh_range_mm()).atan()
    }

    /// Accumulated Gouy phase of mode `m` at `z`: `-(|m| + 1) arctan(z / z_R)`.
    pub fn gouy_phase(&self, m: i32) -> f64 {
        -((m.unsigned_abs() as f64) + 1.0) * self.gouy_angle()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid side must be at least 2, got {0}")]
    SideTooSmall(usize),
    #[error("grid extent must be positive, got {0}")]
    NonPositiveExtent(f64),
    #[error("cannot renormalize an identically zero field")]
    ZeroField,
    #[error("operands sampled on different grids")]
    GridMismatch,
}

/// Square sampling grid, symmetric about the beam axis.
///
/// `side` samples per axis spanning `[-extent_mm, +extent_mm]` inclusive, so
/// the pitch is `2 extent / (side - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub side: usize,
    pub extent_mm: f64,
}

impl GridSpec {
    pub fn new(side: usize, extent_mm: f64) -> Result<Self, FieldError> {
        if side < 2 {
            return Err(FieldError::SideTooSmall(side));
        }
        if !(extent_mm > 0.0) {
            return Err(FieldError::NonPositiveExtent(extent_mm));
        }
        Ok(Self { side, extent_mm })
    }

    pub fn pitch_mm(&self) -> f64 {
        2.0 * self.extent_mm / (self.side - 1) as f64
    }

    /// Coordinate of sample `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.side - 1) as f64 / 2.0) * self.pitch_mm()
    }
}

/// A complex field sampled on a [`GridSpec`], row-major with `y` varying by
/// row and `x` by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn value(&self, col: usize, row: usize) -> Complex64 {
        self.values[row * self.grid.side + col]
    }

    /// Discrete L2 inner product `sum conj(self) * other * pitch^2`.
    pub fn overlap(&self, other: &SampledField) -> Result<Complex64, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.conj() * b;
        }
        let p = self.grid.pitch_mm();
        Ok(acc * p * p)
    }

    /// CSV dump with real and imaginary parts interleaved along each grid row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in 0..self.grid.side {
            let cells: Vec<String> = (0..self.grid.side)
                .flat_map(|col| {
                    let v = self.value(col, row);
                    [format!("{}", v.re), format!("{}", v.im)]
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// Evaluates a single waist-plane mode at `(x_mm, y_mm)`.
pub fn eval_lg(mode: ModeIndex, geom: &BeamGeometry, x_mm: f64, y_mm: f64) -> Complex64 {
    let w0 = geom.w0_mm;
    let r2 = x_mm * x_mm + y_mm * y_mm;
    let am = mode.m.unsigned_abs();
    let norm = (2.0 / (std::f64::consts::PI * factorial(am))).sqrt();
    let radial = (std::f64::consts::SQRT_2 * r2.sqrt() / w0).powi(am as i32);
    let envelope = (-r2 / (w0 * w0)).exp();
    let phase = mode.m as f64 * y_mm.atan2(x_mm);
    norm * radial * envelope * Complex64::from_polar(1.0, phase)
}

/// Samples a superposition of modes on a grid.
///
/// With `normalize` set the field is scaled to unit discrete L2 norm, which
/// is the convention expected by [`SampledField::overlap`] orthonormality.
pub fn sample_field(
    terms: &[(ModeIndex, Complex64)],
    geom: &BeamGeometry,
    grid: GridSpec,
    normalize: bool,
) -> Result<SampledField, FieldError> {
    GridSpec::new(grid.side, grid.extent_mm)?;
    let mut values = Vec::with_capacity(grid.side * grid.side);
    for row in 0..grid.side {
        let y = grid.coord(row);
        for col in 0..grid.side {
            let x = grid.coord(col);
            let mut v = Complex64::new(0.0, 0.0);
            for (mode, w) in terms {
                v += w * eval_lg(*mode, geom, x, y);
            }
            values.push(v);
        }
    }
    if normalize {
        let p = grid.pitch_mm();
        let norm2: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * p * p;
        if norm2 == 0.0 {
            return Err(FieldError::ZeroField);
        }
        let s = norm2.sqrt().recip();
        for v in &mut values {
            *v *= s;
        }
    }
    Ok(SampledField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom() -> BeamGeometry {
        BeamGeometry {
            w0_mm: 2.0,
            lambda_nm: 812.0,
            z_mm: 0.0,
        }
    }

    #[test]
    fn gaussian_peak_value_at_origin() {
        let v = eval_lg(ModeIndex::new(0), &geom(), 0.0, 0.0);
        assert!((v.re - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn second_order_magnitude_matches_closed_form() {
        // sqrt(2/(pi 2!)) * exp(-1/4) * (sqrt(2)/2)^2 at (1 mm, 0), w0 = 2 mm.
        let v = eval_lg(ModeIndex::new(2), &geom(), 1.0, 0.0);
        assert!((v.norm() - 0.21969564473386125).abs() < 1e-12);
    }

    #[test]
    fn opposite_handedness_is_complex_conjugate() {
        for &(x, y) in &[(0.3, 0.7), (-1.1, 0.2), (0.9, -1.4), (-0.5, -0.6)] {
            for m in 1..=3 {
                let a = eval_lg(ModeIndex::new(m), &geom(), x, y);
                let b = eval_lg(ModeIndex::new(-m), &geom(), x, y);
                assert!((a.conj() - b).norm() < 1e-15);
            }
        }
    }

    fn winding(points: impl Iterator<Item = Complex64>) -> f64 {
        let vals: Vec<Complex64> = points.collect();
        let mut total = 0.0;
        for i in 0..vals.len() {
            let a = vals[i].arg();
            let b = vals[(i + 1) % vals.len()].arg();
            total += crate::angles::wrap_pi(b - a);
        }
        total
    }

    proptest! {
        #[test]
        fn phase_winds_by_topological_charge(m in -3i32..=3, r in 0.1f64..3.0) {
            let g = geom();
            let total = winding((0..256).map(|k| {
                let th = k as f64 / 256.0 * std::f64::consts::TAU;
                eval_lg(ModeIndex::new(m), &g, r * th.cos(), r * th.sin())
            }));
            prop_assert!((total - m as f64 * std::f64::consts::TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn blended_gaussian_displaces_the_vortex() {
        // 0.6 LG(+1) + 0.4 LG(0) has its null where the first-order ring
        // amplitude cancels the Gaussian: r = 0.4 w0 / (0.6 sqrt(2)) on the
        // negative x axis.
        let g = geom();
        let terms = [
            (ModeIndex::new(1), Complex64::new(0.6, 0.0)),
            (ModeIndex::new(0), Complex64::new(0.4, 0.0)),
        ];
        let field = |x: f64, y: f64| -> Complex64 {
            terms
                .iter()
                .map(|(mode, w)| w * eval_lg(*mode, &g, x, y))
                .sum()
        };
        let x0 = -0.9428090415820635;
        assert!(field(x0, 0.0).norm() < 1e-12);
        // Unit winding around the displaced null.
        let total = winding((0..512).map(|k| {
            let th = k as f64 / 512.0 * std::f64::consts::TAU;
            field(x0 + 0.3 * th.cos(), 0.3 * th.sin())
        }));
        assert!((total - std::f64::consts::TAU).abs() < 1e-9);
        // And no off-center zero on the opposite side.
        assert!(field(-x0, 0.0).norm() > 1e-3);
    }

    #[test]
    fn sampled_modes_are_orthonormal_to_quadrature_accuracy() {
        let g = geom();
        let grid = GridSpec::new(512, 4.0 * g.w0_mm).unwrap();
        let fields: Vec<SampledField> = (-3..=3)
            .map(|m| {
                sample_field(
                    &[(ModeIndex::new(m), Complex64::new(1.0, 0.0))],
                    &g,
                    grid,
                    true,
                )
                .unwrap()
            })
            .collect();
        for (i, a) in fields.iter().enumerate() {
            for (j, b) in fields.iter().enumerate() {
                let ov = a.overlap(b).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (ov.norm() - expect).abs() < 1e-6,
                    "modes {} and {}: overlap {}",
                    i as i32 - 3,
                    j as i32 - 3,
                    ov
                );
            }
        }
    }

    #[test]
    fn grid_validation_rejects_degenerate_specs() {
        assert_eq!(GridSpec::new(1, 1.0), Err(FieldError::SideTooSmall(1)));
        assert_eq!(GridSpec::new(64, 0.0), Err(FieldError::NonPositiveExtent(0.0)));
        assert_eq!(GridSpec::new(64, -2.0), Err(FieldError::NonPositiveExtent(-2.0)));
    }

    #[test]
    fn csv_dump_interleaves_re_im() {
        let g = geom();
        let grid = GridSpec::new(3, 1.0).unwrap();
        let f = sample_field(
            &[(ModeIndex::new(1), Complex64::new(1.0, 0.0))],
            &g,
            grid,
            false,
        )
        .unwrap();
        let csv = f.to_csv();
        assert_eq!(csv.lines().count(), 3);
        for line in csv.lines() {
            assert_eq!(line.split(',').count(), 6);
        }
    }

    #[test]
    fn overlap_requires_matching_grids() {
        let g = geom();
        let a = sample_field(
            &[(ModeIndex::new(0), Complex64::new(1.0, 0.0))],
            &g,
            GridSpec::new(16, 4.0).unwrap(),
            false,
        )
        .unwrap();
        let b = sample_field(
            &[(ModeIndex::new(0), Complex64::new(1.0, 0.0))],
            &g,
            GridSpec::new(16, 5.0).unwrap(),
            false,
        )
        .unwrap();
        assert_eq!(a.overlap(&b), Err(FieldError::GridMismatch));
    }
}
