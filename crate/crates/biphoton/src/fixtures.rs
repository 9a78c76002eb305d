//! Embedded reference spectra from bench measurements of a Gaussian-pumped
//! source, used as ground truth in tests and as the default diagonal profile
//! for synthesized states.
//!
//! Two datasets are included, keyed by the analysis waist: the 2 mm waist
//! spectrum resolves modes up to `|m| = 2` (including the reference mode),
//! the 1 mm waist spectrum trades brightness for bandwidth and reaches
//! `|m| = 3` (reference mode not tabulated). Values are stored exactly as
//! recorded: intensities normalized against the full mode grid (so diagonal
//! rows alone do not sum to one) and phases in radians relative to the
//! reference mode, with per-row standard errors.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::state::{BiphotonState, ModePair, PumpSpec};

/// One measured spectrum entry: intensity and phase of mode `(m, n)` with
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub m: i32,
    pub n: i32,
    pub intensity: f64,
    pub intensity_err: f64,
    pub phase: f64,
    pub phase_err: f64,
}

fn parse(text: &str) -> Vec<SpectrumRow> {
    serde_json::from_str(text).expect("embedded spectrum parses")
}

/// Diagonal spectrum measured with a 2 mm analysis waist, reference mode
/// included.
pub fn spectrum_w0_2mm() -> Vec<SpectrumRow> {
    parse(include_str!("data/spectrum_w0_2mm.json"))
}

/// Diagonal spectrum measured with a 1 mm analysis waist, reaching third
/// order; the reference mode row is not part of the dataset.
pub fn spectrum_w0_1mm() -> Vec<SpectrumRow> {
    parse(include_str!("data/spectrum_w0_1mm.json"))
}

/// Real diagonal amplitude profile `g(k)` derived from the 2 mm spectrum:
/// the square root of the mean measured intensity at each `|m|`.
pub fn reference_profile() -> BTreeMap<u32, f64> {
    let mut sums: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    for row in spectrum_w0_2mm() {
        let e = sums.entry(row.m.unsigned_abs()).or_insert((0.0, 0));
        e.0 += row.intensity;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, (sum, count))| (k, (sum / count as f64).sqrt()))
        .collect()
}

/// Pump specification of the reference source: a plain Gaussian pump with
/// the embedded diagonal profile.
pub fn reference_pump() -> PumpSpec {
    PumpSpec::new(vec![(0, Complex64::new(1.0, 0.0))], reference_profile())
        .expect("reference pump is valid")
}

/// The 2 mm spectrum assembled into a state with coefficients
/// `sqrt(I) * exp(i phase)` taken verbatim, without renormalizing, so that
/// projective probabilities reproduce the recorded intensities exactly.
pub fn reference_state() -> BiphotonState {
    BiphotonState::from_coefficients(
        spectrum_w0_2mm().into_iter().map(|row| {
            (
                ModePair::new(row.m, row.n),
                Complex64::from_polar(row.intensity.sqrt(), row.phase),
            )
        }),
        2,
    )
    .expect("embedded rows fit bandwidth 2")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_spectra_parse_with_expected_shape() {
        let wide = spectrum_w0_2mm();
        assert_eq!(wide.len(), 5);
        let root = wide.iter().find(|r| r.m == 0 && r.n == 0).unwrap();
        assert_eq!(root.phase, 0.0);
        assert_eq!(root.phase_err, 0.0);
        assert_eq!(root.intensity, 0.298);

        let deep = spectrum_w0_1mm();
        assert_eq!(deep.len(), 6);
        assert!(deep.iter().all(|r| r.m != 0));
        assert_eq!(deep.iter().map(|r| r.m.abs()).max(), Some(3));
        // Every row conserves total orbital index for a Gaussian pump.
        for r in wide.iter().chain(&deep) {
            assert_eq!(r.m + r.n, 0);
        }
    }

    #[test]
    fn profile_averages_signed_orders() {
        let g = reference_profile();
        assert_eq!(g.len(), 3);
        assert!((g[&0] - 0.298f64.sqrt()).abs() < 1e-15);
        assert!((g[&1] - 0.201f64.sqrt()).abs() < 1e-15);
        assert!((g[&2] - 0.049f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reference_state_preserves_recorded_intensities() {
        let state = reference_state();
        assert_eq!(state.modes().count(), 5);
        let c = state.coeff(ModePair::new(1, -1));
        assert!((c.norm_sqr() - 0.205).abs() < 1e-15);
        assert!((crate::angles::wrap_2pi(c.arg()) - 3.77).abs() < 1e-12);
        // Total stays at the recorded fraction of the full grid.
        assert!((state.total_intensity() - 0.798).abs() < 1e-12);
    }
}
