//! Projective coincidence measurements on two-photon states.
//!
//! A detection device holds one analysis pattern per arm; each pattern is a
//! superposition of at most two basis modes with real weights and phase
//! offsets. Projecting a state onto a device sums the coefficient picked out
//! by every cross product of arm terms, conjugating the device phases.
//! Devices are deliberately left unnormalized: bare single-mode devices then
//! read intensities on the same scale the state stores them.
//!
//! Acquisition turns a projection probability into simulated coincidence
//! counts. Each (device, seed) pair maps to its own counter-mode stream, so
//! repeated acquisitions of the same device are bit-identical no matter the
//! order in which a session interleaves them.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::wrap_2pi;
use crate::modes::ModeIndex;
use crate::state::{Arm, BiphotonState};

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("an arm pattern needs one or two terms, got {0}")]
    BadTermCount(usize),
    #[error("arm term weights must be positive, got {0}")]
    BadWeight(f64),
    #[error("stepped term index {0} out of range for a {1}-term pattern")]
    BadSteppedTerm(usize, usize),
}

/// One component of an arm pattern: a basis mode with a real weight and a
/// phase offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTerm {
    pub mode: ModeIndex,
    pub weight: f64,
    pub phase: f64,
}

/// Analysis pattern for a single arm: one mode, or a weighted two-mode
/// superposition (target first, reference second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmPattern {
    terms: Vec<ArmTerm>,
}

impl ArmPattern {
    pub fn new(terms: Vec<ArmTerm>) -> Result<Self, DeviceError> {
        if terms.is_empty() || terms.len() > 2 {
            return Err(DeviceError::BadTermCount(terms.len()));
        }
        if let Some(t) = terms.iter().find(|t| !(t.weight > 0.0)) {
            return Err(DeviceError::BadWeight(t.weight));
        }
        Ok(Self { terms })
    }

    /// Plain single-mode analyzer with unit weight.
    pub fn single(m: i32) -> Self {
        Self {
            terms: vec![ArmTerm {
                mode: ModeIndex::new(m),
                weight: 1.0,
                phase: 0.0,
            }],
        }
    }

    /// Two-mode analyzer `d_t |target> + d_r e^{i phase_r} |reference>`.
    pub fn with_reference(
        target: i32,
        d_target: f64,
        reference: i32,
        d_reference: f64,
        reference_phase: f64,
    ) -> Result<Self, DeviceError> {
        Self::new(vec![
            ArmTerm {
                mode: ModeIndex::new(target),
                weight: d_target,
                phase: 0.0,
            },
            ArmTerm {
                mode: ModeIndex::new(reference),
                weight: d_reference,
                phase: reference_phase,
            },
        ])
    }

    pub fn terms(&self) -> &[ArmTerm] {
        &self.terms
    }

    pub fn is_superposition(&self) -> bool {
        self.terms.len() == 2
    }

    /// The complex field displayed for this pattern, as sampling terms.
    pub fn field_terms(&self) -> Vec<(ModeIndex, Complex64)> {
        self.terms
            .iter()
            .map(|t| (t.mode, Complex64::from_polar(t.weight, t.phase)))
            .collect()
    }

    fn shifted(&self, term_index: usize, delta: f64) -> Self {
        let mut terms = self.terms.clone();
        terms[term_index].phase = wrap_2pi(terms[term_index].phase + delta);
        Self { terms }
    }
}

impl std::fmt::Display for ArmPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if (t.weight - 1.0).abs() > 1e-12 || self.terms.len() > 1 {
                write!(f, "{:.3}", t.weight)?;
            }
            if t.phase != 0.0 {
                write!(f, " e^(i {:.4})", t.phase)?;
            }
            write!(f, "|{:+}>", t.mode.m)?;
        }
        Ok(())
    }
}

/// Full detection device: one analysis pattern per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub arm_a: ArmPattern,
    pub arm_b: ArmPattern,
}

impl DeviceSpec {
    /// Bare coincidence projector onto `(m, n)`.
    pub fn bare(m: i32, n: i32) -> Self {
        Self {
            arm_a: ArmPattern::single(m),
            arm_b: ArmPattern::single(n),
        }
    }

    pub fn arm(&self, arm: Arm) -> &ArmPattern {
        match arm {
            Arm::A => &self.arm_a,
            Arm::B => &self.arm_b,
        }
    }

    /// Projection amplitude `<device|state>`: device phases enter conjugated.
    pub fn project(&self, state: &BiphotonState) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for a in self.arm_a.terms() {
            for b in self.arm_b.terms() {
                let c = state.coeff(crate::state::ModePair::new(a.mode.m, b.mode.m));
                if c != Complex64::new(0.0, 0.0) {
                    sum += Complex64::from_polar(a.weight * b.weight, -(a.phase + b.phase)) * c;
                }
            }
        }
        sum
    }

    /// Coincidence probability on the state's intensity scale.
    pub fn probability(&self, state: &BiphotonState) -> f64 {
        self.project(state).norm_sqr()
    }

    /// Stable content hash over modes, weights and phases of both arms,
    /// used to derive the acquisition noise stream and to label records.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf29ce484222325;
        const PRIME: u64 = 0x100000001b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for (tag, pattern) in [(b'A', &self.arm_a), (b'B', &self.arm_b)] {
            eat(&[tag, pattern.terms().len() as u8]);
            for t in pattern.terms() {
                eat(&t.mode.m.to_le_bytes());
                eat(&t.weight.to_bits().to_le_bytes());
                eat(&t.phase.to_bits().to_le_bytes());
            }
        }
        h
    }
}

impl std::fmt::Display for DeviceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "A: {}  B: {}", self.arm_a, self.arm_b)
    }
}

/// A device with one designated term whose phase is stepped during
/// interferometric acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SteppedDevice {
    base: DeviceSpec,
    arm: Arm,
    term_index: usize,
}

impl SteppedDevice {
    pub fn new(base: DeviceSpec, arm: Arm, term_index: usize) -> Result<Self, DeviceError> {
        let n = base.arm(arm).terms().len();
        if term_index >= n {
            return Err(DeviceError::BadSteppedTerm(term_index, n));
        }
        Ok(Self {
            base,
            arm,
            term_index,
        })
    }

    pub fn base(&self) -> &DeviceSpec {
        &self.base
    }

    pub fn stepped_arm(&self) -> Arm {
        self.arm
    }

    /// The device realized at reference phase `phi`.
    pub fn at(&self, phi: f64) -> DeviceSpec {
        let mut device = self.base.clone();
        match self.arm {
            Arm::A => device.arm_a = device.arm_a.shifted(self.term_index, phi),
            Arm::B => device.arm_b = device.arm_b.shifted(self.term_index, phi),
        }
        device
    }
}

/// How sampled coincidence counts deviate from their expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// Shot-noise limited counting: each window draws from a Poisson law.
    Poisson,
    /// Every window reports the exact expected count.
    None,
}

/// Detector and acquisition settings shared by a measurement session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Mean coincidences per window for a unit-probability projection.
    pub brightness: f64,
    /// Counting window length, descriptive only.
    pub window_s: f64,
    /// Windows averaged per recorded measurement.
    pub repeats: usize,
    /// Session seed; acquisition streams derive from it and the device.
    pub seed: u64,
    pub noise: NoiseModel,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            brightness: 1450.0,
            window_s: 10.0,
            repeats: 5,
            seed: 7,
            noise: NoiseModel::Poisson,
        }
    }
}

/// Raw counts from repeated windows of one device setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    pub samples: Vec<f64>,
}

impl CoincidenceRecord {
    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sample standard deviation (n - 1); zero when fewer than two windows.
    pub fn std(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.samples.iter().map(|s| (s - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }
}

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn stream_for(seed: u64, fingerprint: u64) -> ChaCha8Rng {
    let mut x = seed ^ fingerprint.wrapping_mul(0x9E3779B97F4A7C15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut x).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Simulates `config.repeats` counting windows of `device` on `state`.
///
/// The expected count is `brightness * probability`. The noise stream is a
/// pure function of `(config.seed, device fingerprint)`: acquiring the same
/// device twice in a session reproduces the same record exactly.
pub fn acquire(
    device: &DeviceSpec,
    state: &BiphotonState,
    config: &DetectorConfig,
) -> CoincidenceRecord {
    let lambda = config.brightness * device.probability(state);
    let samples = match config.noise {
        NoiseModel::None => vec![lambda; config.repeats],
        NoiseModel::Poisson => {
            if lambda == 0.0 {
                vec![0.0; config.repeats]
            } else {
                let mut rng = stream_for(config.seed, device.fingerprint());
                let law = Poisson::new(lambda).expect("positive mean");
                (0..config.repeats).map(|_| law.sample(&mut rng)).collect()
            }
        }
    };
    CoincidenceRecord { samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_state;
    use std::f64::consts::PI;

    fn two_arm_device(phase: f64) -> DeviceSpec {
        DeviceSpec {
            arm_a: ArmPattern::with_reference(1, 0.6, 0, 0.4, 0.0).unwrap(),
            arm_b: ArmPattern::with_reference(-1, 0.6, 0, 0.4, phase).unwrap(),
        }
    }

    #[test]
    fn bare_devices_read_recorded_intensities() {
        let state = reference_state();
        assert!((DeviceSpec::bare(1, -1).probability(&state) - 0.205).abs() < 1e-15);
        assert!((DeviceSpec::bare(0, 0).probability(&state) - 0.298).abs() < 1e-15);
        assert_eq!(DeviceSpec::bare(2, 2).probability(&state), 0.0);
    }

    #[test]
    fn two_arm_projection_matches_hand_algebra() {
        let state = reference_state();
        let p = two_arm_device(0.0).probability(&state);
        // |0.36 sqrt(0.205) e^{i 3.77} + 0.16 sqrt(0.298)|^2
        assert!((p - 0.011162916852323443).abs() < 1e-15);
    }

    #[test]
    fn device_phase_enters_conjugated() {
        let state = reference_state();
        let base = DeviceSpec::bare(1, -1);
        let stepped = SteppedDevice::new(base.clone(), Arm::B, 0).unwrap();
        let delta = 0.9;
        let shifted = stepped.at(delta).project(&state);
        let expect = base.project(&state) * Complex64::from_polar(1.0, -delta);
        assert!((shifted - expect).norm() < 1e-12);
    }

    #[test]
    fn stepping_sweeps_interference_fringe() {
        let state = reference_state();
        let stepped = SteppedDevice::new(two_arm_device(0.0), Arm::B, 1).unwrap();
        // Fringe I(phi) = A + B cos(delta + phi) with delta = 3.77.
        let at = |phi: f64| stepped.at(phi).probability(&state);
        let x = at(0.0) - at(PI);
        let y = at(PI / 2.0) - at(3.0 * PI / 2.0);
        let measured = wrap_2pi(-y.atan2(x));
        assert!((measured - 3.77).abs() < 1e-12);
    }

    #[test]
    fn acquisition_is_deterministic_per_device_and_seed() {
        let state = reference_state();
        let config = DetectorConfig::default();
        let device = DeviceSpec::bare(1, -1);
        let first = acquire(&device, &state, &config);
        let second = acquire(&device, &state, &config);
        assert_eq!(first, second);
        assert_eq!(first.samples.len(), 5);

        let other_device = acquire(&DeviceSpec::bare(-1, 1), &state, &config);
        assert_ne!(first, other_device);
        let other_seed = acquire(
            &device,
            &state,
            &DetectorConfig {
                seed: 8,
                ..config
            },
        );
        assert_ne!(first, other_seed);
    }

    #[test]
    fn sample_mean_converges_to_expected_counts() {
        let state = reference_state();
        let config = DetectorConfig {
            repeats: 10_000,
            ..DetectorConfig::default()
        };
        let record = acquire(&DeviceSpec::bare(1, -1), &state, &config);
        let expect = 1450.0 * 0.205;
        assert!((record.mean() - expect).abs() / expect < 0.01);
        // Poisson: variance tracks the mean.
        let var = record.std().powi(2);
        assert!((var - expect).abs() / expect < 0.05);
    }

    #[test]
    fn noiseless_acquisition_reports_exact_expectations() {
        let state = reference_state();
        let config = DetectorConfig {
            noise: NoiseModel::None,
            ..DetectorConfig::default()
        };
        let record = acquire(&DeviceSpec::bare(-2, 2), &state, &config);
        assert_eq!(record.samples, vec![1450.0 * 0.047; 5]);
        assert_eq!(record.std(), 0.0);
        // Projections of absent modes count nothing under either model.
        let empty = acquire(&DeviceSpec::bare(2, 1), &state, &DetectorConfig::default());
        assert_eq!(empty.samples, vec![0.0; 5]);
    }

    #[test]
    fn fingerprints_distinguish_devices() {
        let a = DeviceSpec::bare(0, 0);
        let b = DeviceSpec::bare(1, -1);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), DeviceSpec::bare(0, 0).fingerprint());
        let stepped = SteppedDevice::new(two_arm_device(0.0), Arm::B, 1).unwrap();
        assert_ne!(
            stepped.at(0.0).fingerprint(),
            stepped.at(PI).fingerprint()
        );
    }

    #[test]
    fn pattern_validation_rejects_bad_shapes() {
        assert_eq!(
            ArmPattern::new(vec![]).unwrap_err(),
            DeviceError::BadTermCount(0)
        );
        let term = ArmTerm {
            mode: ModeIndex::new(0),
            weight: 1.0,
            phase: 0.0,
        };
        assert_eq!(
            ArmPattern::new(vec![term; 3]).unwrap_err(),
            DeviceError::BadTermCount(3)
        );
        assert_eq!(
            ArmPattern::with_reference(1, 0.0, 0, 1.0, 0.0).unwrap_err(),
            DeviceError::BadWeight(0.0)
        );
        assert_eq!(
            SteppedDevice::new(DeviceSpec::bare(0, 0), Arm::A, 1).unwrap_err(),
            DeviceError::BadSteppedTerm(1, 1)
        );
    }
}
