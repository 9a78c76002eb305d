//! Sparse two-photon states over the Laguerre-Gaussian basis.
//!
//! A state is a map from azimuthal index pairs `(m, n)` (signal arm carries
//! `m`, idler arm carries `n`) to complex coefficients. Pump synthesis fills
//! conserved diagonals `m + n = l`; phase channels (Gouy propagation, Dove
//! prisms, pump phase structure) multiply coefficients by unit-modulus
//! factors and never change intensities. All channel operations return a new
//! state rather than mutating in place.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::wrap_2pi;
use crate::modes::BeamGeometry;

/// One of the two photon paths: `A` carries the signal index `m`, `B` the
/// idler index `n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    #[default]
    A,
    B,
}

/// Mode pair `(m, n)` addressing one coefficient of a two-photon state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModePair {
    pub m: i32,
    pub n: i32,
}

impl ModePair {
    pub fn new(m: i32, n: i32) -> Self {
        Self { m, n }
    }

    /// Total index weight used for breadth-first ordering.
    pub fn order(&self) -> u32 {
        self.m.unsigned_abs() + self.n.unsigned_abs()
    }

    /// Deterministic planner ordering: by `(|m| + |n|, m, n)`.
    pub fn bfs_key(&self) -> (u32, i32, i32) {
        (self.order(), self.m, self.n)
    }
}

impl std::fmt::Display for ModePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:+}, {:+})", self.m, self.n)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("mode {0} exceeds bandwidth {1}")]
    OutOfBandwidth(ModePair, u32),
    #[error("cannot normalize a state with zero total intensity")]
    ZeroState,
    #[error("pump must contain at least one component with nonzero weight")]
    EmptyPump,
    #[error("diagonal profile weights must be nonnegative, got {0}")]
    NegativeProfileWeight(f64),
    #[error("diagonal profile is identically zero")]
    AllZeroProfile,
    #[error("diagonal profile missing offset {0} required by bandwidth")]
    ProfileMissingOffset(u32),
}

/// Pump decomposition driving state synthesis: orbital components `(l, w_l)`
/// with unit total power, plus a shared real amplitude profile along each
/// conserved diagonal keyed by `min(|m|, |n|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    components: Vec<(i32, Complex64)>,
    profile: BTreeMap<u32, f64>,
}

impl PumpSpec {
    pub fn new(
        components: Vec<(i32, Complex64)>,
        profile: BTreeMap<u32, f64>,
    ) -> Result<Self, StateError> {
        let power: f64 = components.iter().map(|(_, w)| w.norm_sqr()).sum();
        if components.is_empty() || power == 0.0 {
            return Err(StateError::EmptyPump);
        }
        if let Some(w) = profile.values().find(|w| **w < 0.0) {
            return Err(StateError::NegativeProfileWeight(*w));
        }
        if profile.values().all(|w| *w == 0.0) {
            return Err(StateError::AllZeroProfile);
        }
        let scale = power.sqrt().recip();
        let components = components
            .into_iter()
            .map(|(l, w)| (l, w * scale))
            .collect();
        Ok(Self {
            components,
            profile,
        })
    }

    pub fn components(&self) -> &[(i32, Complex64)] {
        &self.components
    }

    pub fn profile(&self) -> &BTreeMap<u32, f64> {
        &self.profile
    }
}

/// Sparse normalizable two-photon state with a hard index bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonState {
    bandwidth: u32,
    coeffs: BTreeMap<ModePair, Complex64>,
}

/// JSON record format for one coefficient.
#[derive(Debug, Serialize, Deserialize)]
struct ModeRecord {
    m: i32,
    n: i32,
    re: f64,
    im: f64,
}

impl BiphotonState {
    pub fn from_coefficients<I>(coeffs: I, bandwidth: u32) -> Result<Self, StateError>
    where
        I: IntoIterator<Item = (ModePair, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (pair, c) in coeffs {
            if pair.m.unsigned_abs() > bandwidth || pair.n.unsigned_abs() > bandwidth {
                return Err(StateError::OutOfBandwidth(pair, bandwidth));
            }
            if c != Complex64::new(0.0, 0.0) {
                map.insert(pair, c);
            }
        }
        Ok(Self {
            bandwidth,
            coeffs: map,
        })
    }

    pub fn bandwidth(&self) -> u32 {
        self.bandwidth
    }

    /// Coefficient of `(m, n)`; zero for any pair not present.
    pub fn coeff(&self, pair: ModePair) -> Complex64 {
        self.coeffs
            .get(&pair)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Nonzero coefficients in deterministic `(m, n)` order.
    pub fn modes(&self) -> impl Iterator<Item = (ModePair, Complex64)> + '_ {
        self.coeffs.iter().map(|(p, c)| (*p, *c))
    }

    pub fn total_intensity(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    /// Amplitude and phase of `(m, n)` with the phase wrapped into `[0, 2pi)`.
    pub fn polar(&self, pair: ModePair) -> (f64, f64) {
        let c = self.coeff(pair);
        (c.norm(), wrap_2pi(c.arg()))
    }

    pub fn normalize(&self) -> Result<Self, StateError> {
        let total = self.total_intensity();
        if total == 0.0 {
            return Err(StateError::ZeroState);
        }
        let s = total.sqrt().recip();
        Ok(self.map(|_, c| c * s))
    }

    /// Keeps only pairs accepted by `keep`, preserving the bandwidth.
    pub fn filter(&self, mut keep: impl FnMut(ModePair) -> bool) -> Self {
        Self {
            bandwidth: self.bandwidth,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(p, _)| keep(**p))
                .map(|(p, c)| (*p, *c))
                .collect(),
        }
    }

    fn map(&self, mut f: impl FnMut(ModePair, Complex64) -> Complex64) -> Self {
        Self {
            bandwidth: self.bandwidth,
            coeffs: self.coeffs.iter().map(|(p, c)| (*p, f(*p, *c))).collect(),
        }
    }

    /// Propagation channel: each arm accumulates its Gouy phase
    /// `-(|index| + 1) arctan(z / z_R)` under its own geometry.
    pub fn apply_gouy(&self, arm_a: &BeamGeometry, arm_b: &BeamGeometry) -> Self {
        self.map(|p, c| {
            c * Complex64::from_polar(1.0, arm_a.gouy_phase(p.m) + arm_b.gouy_phase(p.n))
        })
    }

    /// Dove-prism pair rotated by `eta` in one arm: mode `k` in that arm
    /// acquires the geometric phase `2 k eta`.
    pub fn apply_dove_pair(&self, eta_rad: f64, arm: Arm) -> Self {
        self.map(|p, c| {
            let k = match arm {
                Arm::A => p.m,
                Arm::B => p.n,
            };
            c * Complex64::from_polar(1.0, 2.0 * k as f64 * eta_rad)
        })
    }

    /// Adds `shift` to the phase of every mode on the conserved diagonal
    /// `m + n = l`, as produced by restructuring the pump component `l`.
    pub fn apply_diagonal_phase(&self, l: i32, shift_rad: f64) -> Self {
        self.map(|p, c| {
            if p.m + p.n == l {
                c * Complex64::from_polar(1.0, shift_rad)
            } else {
                c
            }
        })
    }

    /// Serializes as a JSON array of `{m, n, re, im}` records in `(m, n)`
    /// order.
    pub fn to_json(&self) -> String {
        let records: Vec<ModeRecord> = self
            .coeffs
            .iter()
            .map(|(p, c)| ModeRecord {
                m: p.m,
                n: p.n,
                re: c.re,
                im: c.im,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("state records serialize")
    }

    /// Parses the record format written by [`Self::to_json`]; the bandwidth
    /// becomes the largest index magnitude present.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let records: Vec<ModeRecord> = serde_json::from_str(text)?;
        let bandwidth = records
            .iter()
            .map(|r| r.m.unsigned_abs().max(r.n.unsigned_abs()))
            .max()
            .unwrap_or(0);
        Ok(Self::from_coefficients(
            records
                .into_iter()
                .map(|r| (ModePair::new(r.m, r.n), Complex64::new(r.re, r.im))),
            bandwidth,
        )
        .expect("records are within the inferred bandwidth"))
    }
}

/// Builds the state radiated by `pump` truncated to `|m|, |n| <= bandwidth`:
/// every pair on a conserved diagonal gets `w_l * g(min(|m|, |n|))`, then the
/// state as a whole is normalized.
pub fn synthesize(pump: &PumpSpec, bandwidth: u32) -> Result<BiphotonState, StateError> {
    for offset in 0..=bandwidth {
        if !pump.profile.contains_key(&offset) {
            return Err(StateError::ProfileMissingOffset(offset));
        }
    }
    let mut coeffs: BTreeMap<ModePair, Complex64> = BTreeMap::new();
    for (l, w) in &pump.components {
        for m in -(bandwidth as i32)..=(bandwidth as i32) {
            let n = l - m;
            if n.unsigned_abs() > bandwidth {
                continue;
            }
            let offset = m.unsigned_abs().min(n.unsigned_abs());
            let g = pump.profile[&offset];
            if g == 0.0 {
                continue;
            }
            *coeffs
                .entry(ModePair::new(m, n))
                .or_insert(Complex64::new(0.0, 0.0)) += w * g;
        }
    }
    BiphotonState::from_coefficients(coeffs, bandwidth)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn gaussian_pump() -> PumpSpec {
        let profile = crate::fixtures::reference_profile();
        PumpSpec::new(vec![(0, Complex64::new(1.0, 0.0))], profile).unwrap()
    }

    #[test]
    fn gaussian_pump_fills_one_diagonal_with_profile_ratios() {
        let state = synthesize(&gaussian_pump(), 2).unwrap();
        assert_eq!(state.modes().count(), 5);
        assert!((state.total_intensity() - 1.0).abs() < 1e-12);
        for (pair, _) in state.modes() {
            assert_eq!(pair.m + pair.n, 0);
        }
        // Intensity ratios reproduce the measured reference spectrum.
        let i0 = state.coeff(ModePair::new(0, 0)).norm_sqr();
        let i1 = state.coeff(ModePair::new(1, -1)).norm_sqr();
        let i2 = state.coeff(ModePair::new(-2, 2)).norm_sqr();
        assert!((i1 / i0 - 0.201 / 0.298).abs() < 1e-12);
        assert!((i2 / i0 - 0.049 / 0.298).abs() < 1e-12);
    }

    #[test]
    fn structured_pump_adds_off_diagonal_modes() {
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let pump = PumpSpec::new(
            vec![(0, w), (1, w)],
            BTreeMap::from([(0, 1.0), (1, 1.0)]),
        )
        .unwrap();
        let state = synthesize(&pump, 1).unwrap();
        let expect = [(0, 0), (1, -1), (-1, 1), (1, 0), (0, 1)];
        assert_eq!(state.modes().count(), expect.len());
        for (m, n) in expect {
            let c = state.coeff(ModePair::new(m, n));
            assert!((c.norm_sqr() - 0.2).abs() < 1e-12, "({m},{n}) -> {c}");
        }
    }

    #[test]
    fn synthesis_rejects_degenerate_pumps() {
        assert_eq!(
            PumpSpec::new(vec![], BTreeMap::from([(0, 1.0)])).unwrap_err(),
            StateError::EmptyPump
        );
        assert_eq!(
            PumpSpec::new(
                vec![(0, Complex64::new(1.0, 0.0))],
                BTreeMap::from([(0, 0.0)])
            )
            .unwrap_err(),
            StateError::AllZeroProfile
        );
        let pump = PumpSpec::new(
            vec![(0, Complex64::new(1.0, 0.0))],
            BTreeMap::from([(0, 1.0)]),
        )
        .unwrap();
        assert_eq!(
            synthesize(&pump, 2).unwrap_err(),
            StateError::ProfileMissingOffset(1)
        );
    }

    #[test]
    fn gouy_channel_sets_diagonal_phase_ladder() {
        let state = synthesize(&gaussian_pump(), 2).unwrap();
        let theta: f64 = 1.285;
        let g = BeamGeometry {
            w0_mm: 2.0,
            lambda_nm: 812.0,
            z_mm: 15475.825879752674 * theta.tan(),
        };
        assert!((g.gouy_angle() - theta).abs() < 1e-12);
        let out = state.apply_gouy(&g, &g);
        let (_, p0) = out.polar(ModePair::new(0, 0));
        for k in 1..=2 {
            for pair in [ModePair::new(k, -k), ModePair::new(-k, k)] {
                let (a, p) = out.polar(pair);
                let rel = crate::angles::wrap_pi(p - p0);
                let expect = crate::angles::wrap_pi(-2.0 * theta * k as f64);
                assert!((rel - expect).abs() < 1e-12, "{pair}: {rel} vs {expect}");
                assert!((a - state.polar(pair).0).abs() < 1e-15);
            }
        }
        // First-order pairs sit at -2.57 rad relative to the reference mode.
        let rel = crate::angles::wrap_pi(out.polar(ModePair::new(1, -1)).1 - p0);
        assert!((rel - (-2.57)).abs() < 1e-12);
    }

    #[test]
    fn dove_pair_adds_twice_the_rotation_per_unit_charge() {
        let b = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let bell = BiphotonState::from_coefficients(
            [
                (ModePair::new(1, -1), b),
                (ModePair::new(-1, 1), b),
            ],
            1,
        )
        .unwrap();
        let eta = PI / 7.0;
        let out = bell.apply_dove_pair(eta, Arm::A);
        assert!((out.coeff(ModePair::new(1, -1)).arg() - 2.0 * eta).abs() < 1e-12);
        assert!((out.coeff(ModePair::new(-1, 1)).arg() + 2.0 * eta).abs() < 1e-12);
        // Rotating the other arm flips the sign pattern.
        let out_b = bell.apply_dove_pair(eta, Arm::B);
        assert!((out_b.coeff(ModePair::new(1, -1)).arg() + 2.0 * eta).abs() < 1e-12);
        // Two rotations compose additively.
        let twice = out.apply_dove_pair(eta, Arm::A);
        let direct = bell.apply_dove_pair(2.0 * eta, Arm::A);
        for (pair, c) in twice.modes() {
            assert!((c - direct.coeff(pair)).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_phase_shifts_only_the_addressed_diagonal() {
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let pump = PumpSpec::new(
            vec![(0, w), (1, w)],
            BTreeMap::from([(0, 1.0), (1, 1.0)]),
        )
        .unwrap();
        let state = synthesize(&pump, 1).unwrap();
        let shift = 1.9;
        let out = state.apply_diagonal_phase(1, shift);
        for (pair, c) in out.modes() {
            let base = state.coeff(pair);
            let expect = if pair.m + pair.n == 1 { shift } else { 0.0 };
            assert!(
                (crate::angles::wrap_pi(c.arg() - base.arg()) - expect).abs() < 1e-12,
                "{pair}"
            );
        }
    }

    #[test]
    fn channels_preserve_intensities() {
        let state = synthesize(&gaussian_pump(), 2).unwrap();
        let g = BeamGeometry {
            w0_mm: 2.0,
            lambda_nm: 812.0,
            z_mm: 777.0,
        };
        for out in [
            state.apply_gouy(&g, &g),
            state.apply_dove_pair(0.4, Arm::A),
            state.apply_diagonal_phase(0, 2.2),
        ] {
            for (pair, c) in out.modes() {
                assert!((c.norm() - state.coeff(pair).norm()).abs() < 1e-15, "{pair}");
            }
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let state = synthesize(&gaussian_pump(), 2)
            .unwrap()
            .apply_dove_pair(0.37, Arm::A);
        let restored = BiphotonState::from_json(&state.to_json()).unwrap();
        assert_eq!(state.modes().count(), restored.modes().count());
        for (pair, c) in state.modes() {
            assert_eq!(c, restored.coeff(pair), "{pair}");
        }
    }

    #[test]
    fn bandwidth_is_enforced_and_phases_reported_in_range() {
        let err = BiphotonState::from_coefficients(
            [(ModePair::new(3, -3), Complex64::new(1.0, 0.0))],
            2,
        )
        .unwrap_err();
        assert_eq!(err, StateError::OutOfBandwidth(ModePair::new(3, -3), 2));

        let state = BiphotonState::from_coefficients(
            [(ModePair::new(1, -1), Complex64::new(0.3, -0.4))],
            1,
        )
        .unwrap();
        let (a, p) = state.polar(ModePair::new(1, -1));
        assert!((a - 0.5).abs() < 1e-12);
        assert!((0.0..TAU).contains(&p));
    }

    #[test]
    fn normalize_rejects_zero_states() {
        let zero = BiphotonState::from_coefficients([], 1).unwrap();
        assert_eq!(zero.normalize().unwrap_err(), StateError::ZeroState);
    }
}
