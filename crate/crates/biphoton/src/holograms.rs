//! Rendering analysis patterns as display-ready phase holograms.
//!
//! Each pattern becomes a blazed grating: a linear carrier ramp along the
//! pixel columns carries the pattern's wrapped phase, and the grating depth
//! is scaled by the pattern's normalized amplitude so that diffraction into
//! the first order reproduces both amplitude and phase of the target field.
//! A charge-`m` vortex shows up as the classic fork: `m` extra fringes
//! terminating at the beam axis.
//!
//! The per-pixel value is `H = wrap[ arg(f e^{i k j}) * |f| / max|f| ]` with
//! `k = 2pi / period` and `j` the column index, wrapped into `[0, 2pi)`.
//! That construction is invertible wherever the envelope is finite, which
//! the tests use to count fork dislocations directly on rendered pixels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::wrap_2pi;
use crate::measurement::ArmPattern;
use crate::modes::{eval_lg, BeamGeometry};

/// Default carrier period, in pixels per fringe.
pub const FRINGE_PERIOD: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum HologramError {
    #[error("hologram grid needs at least one pixel per axis, got {0}x{1}")]
    EmptyGrid(usize, usize),
    #[error("pixel pitch must be positive, got {0}")]
    BadPitch(f64),
    #[error("carrier period must be at least one pixel, got {0}")]
    BadPeriod(usize),
    #[error("gray levels must lie in 2..=65536, got {0}")]
    BadLevels(u32),
}

/// Pixel raster of a display: dimensions and physical pixel pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HologramGrid {
    pub width: usize,
    pub height: usize,
    pub pitch_mm: f64,
}

impl Default for HologramGrid {
    fn default() -> Self {
        Self {
            width: 1920,
            height: 1080,
            pitch_mm: 0.008,
        }
    }
}

impl HologramGrid {
    pub fn new(width: usize, height: usize, pitch_mm: f64) -> Result<Self, HologramError> {
        if width == 0 || height == 0 {
            return Err(HologramError::EmptyGrid(width, height));
        }
        if !(pitch_mm > 0.0) {
            return Err(HologramError::BadPitch(pitch_mm));
        }
        Ok(Self {
            width,
            height,
            pitch_mm,
        })
    }

    /// Physical x of a column, centered on the raster.
    pub fn x_mm(&self, col: usize) -> f64 {
        (col as f64 - (self.width as f64 - 1.0) / 2.0) * self.pitch_mm
    }

    /// Physical y of a row, centered, increasing upward.
    pub fn y_mm(&self, row: usize) -> f64 {
        ((self.height as f64 - 1.0) / 2.0 - row as f64) * self.pitch_mm
    }
}

/// A rendered hologram: per-pixel phase in `[0, 2pi)` plus the normalized
/// amplitude envelope it was scaled by.
#[derive(Debug, Clone, PartialEq)]
pub struct Hologram {
    pub grid: HologramGrid,
    phase: Vec<f64>,
    envelope: Vec<f64>,
}

impl Hologram {
    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.phase[row * self.grid.width + col]
    }

    pub fn envelope(&self, col: usize, row: usize) -> f64 {
        self.envelope[row * self.grid.width + col]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.phase
    }

    /// Undoes the envelope scaling at one pixel, returning the wrapped
    /// carrier-plus-field phase in `(-pi, pi]`; `None` where the envelope is
    /// too small to invert.
    pub fn recover_wrapped_phase(&self, col: usize, row: usize) -> Option<f64> {
        let e = self.envelope(col, row);
        if e <= 1e-12 {
            return None;
        }
        let h = self.value(col, row);
        let scaled = if h > std::f64::consts::PI * e {
            h - std::f64::consts::TAU
        } else {
            h
        };
        Some(scaled / e)
    }
}

/// Renders an arbitrary complex field sampled at physical coordinates.
pub fn render_field_hologram(
    field: impl Fn(f64, f64) -> Complex64,
    grid: &HologramGrid,
    fringe_period: usize,
) -> Result<Hologram, HologramError> {
    if fringe_period == 0 {
        return Err(HologramError::BadPeriod(fringe_period));
    }
    HologramGrid::new(grid.width, grid.height, grid.pitch_mm)?;
    let k = std::f64::consts::TAU / fringe_period as f64;
    let mut samples = Vec::with_capacity(grid.width * grid.height);
    let mut peak = 0.0f64;
    for row in 0..grid.height {
        let y = grid.y_mm(row);
        for col in 0..grid.width {
            let value = field(grid.x_mm(col), y);
            peak = peak.max(value.norm());
            samples.push(value);
        }
    }
    let mut phase = vec![0.0; samples.len()];
    let mut envelope = vec![0.0; samples.len()];
    if peak > 0.0 {
        for row in 0..grid.height {
            for col in 0..grid.width {
                let i = row * grid.width + col;
                let carrier = Complex64::from_polar(1.0, k * col as f64);
                let e = samples[i].norm() / peak;
                phase[i] = wrap_2pi((samples[i] * carrier).arg() * e);
                envelope[i] = e;
            }
        }
    }
    Ok(Hologram {
        grid: *grid,
        phase,
        envelope,
    })
}

/// Renders the mode superposition an arm pattern displays.
pub fn render_hologram(
    pattern: &ArmPattern,
    geometry: &BeamGeometry,
    grid: &HologramGrid,
    fringe_period: usize,
) -> Result<Hologram, HologramError> {
    let terms = pattern.field_terms();
    render_field_hologram(
        move |x, y| {
            terms
                .iter()
                .map(|(mode, amp)| amp * eval_lg(*mode, geometry, x, y))
                .sum()
        },
        grid,
        fringe_period,
    )
}

/// Serializes a hologram as a binary PGM image.
///
/// The phase range `[0, 2pi)` maps linearly onto `0..levels`, one byte per
/// pixel up to 256 levels and two big-endian bytes beyond.
pub fn export_pgm(hologram: &Hologram, levels: u32) -> Result<Vec<u8>, HologramError> {
    if !(2..=65536).contains(&levels) {
        return Err(HologramError::BadLevels(levels));
    }
    let max_value = levels - 1;
    let header = format!(
        "P5\n{} {}\n{}\n",
        hologram.grid.width, hologram.grid.height, max_value
    );
    let wide = levels > 256;
    let mut bytes = Vec::with_capacity(
        header.len() + hologram.pixels().len() * if wide { 2 } else { 1 },
    );
    bytes.extend_from_slice(header.as_bytes());
    for h in hologram.pixels() {
        let value =
            (((h / std::f64::consts::TAU) * max_value as f64).floor() as u32).min(max_value);
        if wide {
            bytes.extend_from_slice(&(value as u16).to_be_bytes());
        } else {
            bytes.push(value as u8);
        }
    }
    Ok(bytes)
}
