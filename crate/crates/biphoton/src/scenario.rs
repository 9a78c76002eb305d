//! Declarative simulation scenarios and the runnable pipelines behind the
//! command line.
//!
//! A scenario is a TOML document: pump decomposition, optional phase
//! channels applied to the synthesized state (propagation, prism pairs,
//! pump restructuring), detector settings, planner settings, and optional
//! sweep and hologram sections. Unknown keys anywhere are errors, so a typo
//! cannot silently change a simulation. Every run function is deterministic
//! for a fixed scenario: identical inputs produce byte-identical outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::wrap_pi;
use crate::fixtures;
use crate::holograms::{
    export_pgm, render_hologram, Hologram, HologramError, HologramGrid, FRINGE_PERIOD,
};
use crate::measurement::{DetectorConfig, DeviceError, DeviceSpec, NoiseModel};
use crate::modes::BeamGeometry;
use crate::psdh::{
    execute_plan, plan, scan_intensities, AcquisitionLog, ExecuteError, IntensityScan,
    MeasurementPlan, PhaseEstimate, PlanError, PlanOptions, PlanStrategy, WeightPolicy,
    PHASE_STEPS,
};
use crate::reconstruct::{
    assemble_state, density_matrix, diagonal_phase_summary, fit_gouy_slope, phase_shift,
    FitResult, PhasedSpectrum, ReconstructError,
};
use crate::state::{synthesize, Arm, BiphotonState, ModePair, PumpSpec, StateError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unsupported scenario schema {0}, expected 1")]
    UnsupportedSchema(u32),
    #[error("unknown channel kind {0:?}")]
    UnknownChannelKind(String),
    #[error("channel {kind:?} requires field {field:?}")]
    MissingChannelField { kind: String, field: String },
    #[error("field {field:?} does not belong to channel kind {kind:?}")]
    ForeignChannelField { kind: String, field: String },
    #[error("arm must be \"a\" or \"b\", got {0:?}")]
    BadArm(String),
    #[error("command needs a [sweep] section providing {0}")]
    MissingSweep(&'static str),
    #[error("invalid pump: {0}")]
    Pump(#[from] StateError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Execute(#[from] ExecuteError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Hologram(#[from] HologramError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// One phase channel applied to the synthesized state, in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    /// Free-space propagation phase per arm.
    Gouy {
        arm_a: BeamGeometry,
        arm_b: BeamGeometry,
    },
    /// Rotated prism pair in one arm.
    Dove { eta_rad: f64, arm: Arm },
    /// Extra phase written onto one pump component's diagonal.
    PumpPhase { l: i32, shift_rad: f64 },
}

/// Planner configuration: strategy plus the shared options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSetup {
    pub strategy: PlanStrategy,
    pub root: ModePair,
    pub options: PlanOptions,
}

impl Default for PlanSetup {
    fn default() -> Self {
        Self {
            strategy: PlanStrategy::Ancillary,
            root: ModePair::new(0, 0),
            options: PlanOptions::default(),
        }
    }
}

/// Sweep settings for the prism-rotation and pump-phase commands.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepConfig {
    pub etas_deg: Vec<f64>,
    pub pump_shifts_rad: Vec<f64>,
    pub pump_l: i32,
    pub dove_arm: Arm,
}


/// Hologram rendering settings.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramConfig {
    pub grid: HologramGrid,
    pub fringe_period: usize,
    pub levels: u32,
    pub target: ModePair,
    pub geometry: BeamGeometry,
}

impl Default for HologramConfig {
    fn default() -> Self {
        Self {
            grid: HologramGrid::default(),
            fringe_period: FRINGE_PERIOD,
            levels: 256,
            target: ModePair::new(1, -1),
            geometry: BeamGeometry {
                w0_mm: 2.0,
                lambda_nm: 812.0,
                z_mm: 0.0,
            },
        }
    }
}

/// A fully validated simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub bandwidth: u32,
    pub pump: PumpSpec,
    pub channels: Vec<Channel>,
    pub detector: DetectorConfig,
    pub plan: PlanSetup,
    pub sweep: SweepConfig,
    pub hologram: HologramConfig,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: u32,
    name: String,
    bandwidth: u32,
    pump: RawPump,
    #[serde(default, rename = "channel")]
    channels: Vec<RawChannel>,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    plan: RawPlan,
    sweep: Option<RawSweep>,
    hologram: Option<RawHologram>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    components: Vec<RawComponent>,
    /// Diagonal amplitudes `g(k)` indexed by offset; defaults to the
    /// embedded reference profile.
    profile: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    l: i32,
    #[serde(default = "default_amplitude")]
    amplitude: f64,
    #[serde(default)]
    phase_rad: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    brightness: Option<f64>,
    window_s: Option<f64>,
    repeats: Option<usize>,
    seed: Option<u64>,
    noise: Option<NoiseModel>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    strategy: Option<PlanStrategy>,
    root: Option<[i32; 2]>,
    epsilon: Option<f64>,
    stepped_arm: Option<String>,
    weights: Option<WeightPolicy>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    kind: String,
    w0_mm: Option<f64>,
    lambda_nm: Option<f64>,
    z_mm: Option<f64>,
    arm: Option<String>,
    eta_deg: Option<f64>,
    l: Option<i32>,
    shift_rad: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default)]
    etas_deg: Vec<f64>,
    #[serde(default)]
    pump_shifts_rad: Vec<f64>,
    #[serde(default)]
    pump_l: i32,
    dove_arm: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHologram {
    width: Option<usize>,
    height: Option<usize>,
    pitch_mm: Option<f64>,
    fringe_period: Option<usize>,
    levels: Option<u32>,
    target: Option<[i32; 2]>,
    w0_mm: Option<f64>,
    lambda_nm: Option<f64>,
}

fn parse_arm(text: &str) -> Result<Arm, ScenarioError> {
    match text {
        "a" | "A" => Ok(Arm::A),
        "b" | "B" => Ok(Arm::B),
        other => Err(ScenarioError::BadArm(other.to_string())),
    }
}

fn require<T>(value: Option<T>, kind: &str, field: &str) -> Result<T, ScenarioError> {
    value.ok_or_else(|| ScenarioError::MissingChannelField {
        kind: kind.to_string(),
        field: field.to_string(),
    })
}

fn forbid<T>(value: &Option<T>, kind: &str, field: &str) -> Result<(), ScenarioError> {
    if value.is_some() {
        return Err(ScenarioError::ForeignChannelField {
            kind: kind.to_string(),
            field: field.to_string(),
        });
    }
    Ok(())
}

fn validate_channel(raw: RawChannel) -> Result<Channel, ScenarioError> {
    let kind = raw.kind.clone();
    match kind.as_str() {
        "gouy" => {
            forbid(&raw.eta_deg, &kind, "eta_deg")?;
            forbid(&raw.l, &kind, "l")?;
            forbid(&raw.shift_rad, &kind, "shift_rad")?;
            let w0_mm = require(raw.w0_mm, &kind, "w0_mm")?;
            let lambda_nm = require(raw.lambda_nm, &kind, "lambda_nm")?;
            let z_mm = require(raw.z_mm, &kind, "z_mm")?;
            let live = BeamGeometry {
                w0_mm,
                lambda_nm,
                z_mm,
            };
            let idle = BeamGeometry {
                w0_mm,
                lambda_nm,
                z_mm: 0.0,
            };
            let (arm_a, arm_b) = match raw.arm.as_deref() {
                None | Some("both") => (live, live),
                Some("a") | Some("A") => (live, idle),
                Some("b") | Some("B") => (idle, live),
                Some(other) => return Err(ScenarioError::BadArm(other.to_string())),
            };
            Ok(Channel::Gouy { arm_a, arm_b })
        }
        "dove" => {
            forbid(&raw.w0_mm, &kind, "w0_mm")?;
            forbid(&raw.lambda_nm, &kind, "lambda_nm")?;
            forbid(&raw.z_mm, &kind, "z_mm")?;
            forbid(&raw.l, &kind, "l")?;
            forbid(&raw.shift_rad, &kind, "shift_rad")?;
            let eta_deg = require(raw.eta_deg, &kind, "eta_deg")?;
            let arm = parse_arm(&require(raw.arm, &kind, "arm")?)?;
            Ok(Channel::Dove {
                eta_rad: eta_deg.to_radians(),
                arm,
            })
        }
        "pump-phase" => {
            forbid(&raw.w0_mm, &kind, "w0_mm")?;
            forbid(&raw.lambda_nm, &kind, "lambda_nm")?;
            forbid(&raw.z_mm, &kind, "z_mm")?;
            forbid(&raw.arm, &kind, "arm")?;
            forbid(&raw.eta_deg, &kind, "eta_deg")?;
            let l = require(raw.l, &kind, "l")?;
            let shift_rad = require(raw.shift_rad, &kind, "shift_rad")?;
            Ok(Channel::PumpPhase { l, shift_rad })
        }
        _ => Err(ScenarioError::UnknownChannelKind(kind)),
    }
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = toml::from_str(text)?;
        if raw.schema != 1 {
            return Err(ScenarioError::UnsupportedSchema(raw.schema));
        }

        let profile: BTreeMap<u32, f64> = match raw.pump.profile {
            Some(values) => values
                .into_iter()
                .enumerate()
                .map(|(k, g)| (k as u32, g))
                .collect(),
            None => fixtures::reference_profile(),
        };
        let components = raw
            .pump
            .components
            .into_iter()
            .map(|c| (c.l, Complex64::from_polar(c.amplitude, c.phase_rad)))
            .collect();
        let pump = PumpSpec::new(components, profile)?;

        let channels = raw
            .channels
            .into_iter()
            .map(validate_channel)
            .collect::<Result<Vec<_>, _>>()?;

        let defaults = DetectorConfig::default();
        let detector = DetectorConfig {
            brightness: raw.detector.brightness.unwrap_or(defaults.brightness),
            window_s: raw.detector.window_s.unwrap_or(defaults.window_s),
            repeats: raw.detector.repeats.unwrap_or(defaults.repeats),
            seed: raw.detector.seed.unwrap_or(defaults.seed),
            noise: raw.detector.noise.unwrap_or(defaults.noise),
        };

        let plan_defaults = PlanSetup::default();
        let plan = PlanSetup {
            strategy: raw.plan.strategy.unwrap_or(plan_defaults.strategy),
            root: raw
                .plan
                .root
                .map(|[m, n]| ModePair::new(m, n))
                .unwrap_or(plan_defaults.root),
            options: PlanOptions {
                epsilon: raw.plan.epsilon.unwrap_or(plan_defaults.options.epsilon),
                stepped_arm: match raw.plan.stepped_arm {
                    Some(text) => parse_arm(&text)?,
                    None => plan_defaults.options.stepped_arm,
                },
                weights: raw.plan.weights.unwrap_or(plan_defaults.options.weights),
            },
        };

        let sweep = match raw.sweep {
            Some(raw_sweep) => SweepConfig {
                etas_deg: raw_sweep.etas_deg,
                pump_shifts_rad: raw_sweep.pump_shifts_rad,
                pump_l: raw_sweep.pump_l,
                dove_arm: match raw_sweep.dove_arm {
                    Some(text) => parse_arm(&text)?,
                    None => Arm::default(),
                },
            },
            None => SweepConfig::default(),
        };

        let hologram_defaults = HologramConfig::default();
        let hologram = match raw.hologram {
            Some(raw_holo) => HologramConfig {
                grid: HologramGrid {
                    width: raw_holo.width.unwrap_or(hologram_defaults.grid.width),
                    height: raw_holo.height.unwrap_or(hologram_defaults.grid.height),
                    pitch_mm: raw_holo
                        .pitch_mm
                        .unwrap_or(hologram_defaults.grid.pitch_mm),
                },
                fringe_period: raw_holo
                    .fringe_period
                    .unwrap_or(hologram_defaults.fringe_period),
                levels: raw_holo.levels.unwrap_or(hologram_defaults.levels),
                target: raw_holo
                    .target
                    .map(|[m, n]| ModePair::new(m, n))
                    .unwrap_or(hologram_defaults.target),
                geometry: BeamGeometry {
                    w0_mm: raw_holo
                        .w0_mm
                        .unwrap_or(hologram_defaults.geometry.w0_mm),
                    lambda_nm: raw_holo
                        .lambda_nm
                        .unwrap_or(hologram_defaults.geometry.lambda_nm),
                    z_mm: 0.0,
                },
            },
            None => hologram_defaults,
        };

        Ok(Self {
            name: raw.name,
            bandwidth: raw.bandwidth,
            pump,
            channels,
            detector,
            plan,
            sweep,
            hologram,
        })
    }

    /// Reference scenario used when no file is given: the embedded
    /// Gaussian-pump source at full bandwidth, measured with defaults.
    pub fn reference() -> Self {
        Self {
            name: "reference".to_string(),
            bandwidth: 2,
            pump: fixtures::reference_pump(),
            channels: Vec::new(),
            detector: DetectorConfig::default(),
            plan: PlanSetup::default(),
            sweep: SweepConfig::default(),
            hologram: HologramConfig::default(),
        }
    }

    /// The state this scenario prepares: pump synthesis plus every channel.
    pub fn build_state(&self) -> Result<BiphotonState, RunError> {
        let mut state = synthesize(&self.pump, self.bandwidth)?;
        for channel in &self.channels {
            state = match channel {
                Channel::Gouy { arm_a, arm_b } => state.apply_gouy(arm_a, arm_b),
                Channel::Dove { eta_rad, arm } => state.apply_dove_pair(*eta_rad, *arm),
                Channel::PumpPhase { l, shift_rad } => {
                    state.apply_diagonal_phase(*l, *shift_rad)
                }
            };
        }
        Ok(state)
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

/// Bare coincidence spectrum of the prepared state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRun {
    pub state: BiphotonState,
    pub scan: IntensityScan,
}

#[derive(Serialize)]
struct IntensityRecord {
    m: i32,
    n: i32,
    intensity: f64,
    intensity_err: f64,
    raw_mean: f64,
    raw_std: f64,
}

impl SpectrumRun {
    fn records(&self) -> Vec<IntensityRecord> {
        self.scan
            .entries()
            .map(|(pair, e)| IntensityRecord {
                m: pair.m,
                n: pair.n,
                intensity: e.intensity,
                intensity_err: e.err,
                raw_mean: e.record.mean(),
                raw_std: e.record.std(),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,intensity,intensity_err,raw_mean,raw_std\n");
        for r in self.records() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.m, r.n, r.intensity, r.intensity_err, r.raw_mean, r.raw_std
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records()).expect("records serialize")
    }

    /// Square grayscale map of the intensity grid, brightest mode at full
    /// scale, modes ordered with `m` down the rows and `n` across.
    pub fn heatmap_pgm(&self) -> Vec<u8> {
        let side = (self.scan.entries().count() as f64).sqrt().round() as usize;
        let peak = self
            .scan
            .entries()
            .map(|(_, e)| e.intensity)
            .fold(0.0f64, f64::max);
        let mut bytes = format!("P5\n{side} {side}\n255\n").into_bytes();
        // BTreeMap order is (m, n) ascending; emit highest m first so the
        // image reads like the usual spectrum plots.
        let rows: Vec<Vec<u8>> = {
            let mut per_m: BTreeMap<i32, Vec<u8>> = BTreeMap::new();
            for (pair, e) in self.scan.entries() {
                let value = if peak > 0.0 {
                    ((e.intensity / peak) * 255.0).round() as u8
                } else {
                    0
                };
                per_m.entry(pair.m).or_default().push(value);
            }
            per_m.into_values().rev().collect()
        };
        for row in rows {
            bytes.extend_from_slice(&row);
        }
        bytes
    }

    pub fn write(&self, dir: &Path, plot: bool) -> io::Result<Vec<PathBuf>> {
        let mut written = vec![
            write_file(dir, "spectrum.csv", self.to_csv().as_bytes())?,
            write_file(dir, "spectrum.json", self.to_json().as_bytes())?,
        ];
        if plot {
            written.push(write_file(dir, "spectrum.pgm", &self.heatmap_pgm())?);
        }
        Ok(written)
    }
}

pub fn run_spectrum(scenario: &Scenario) -> Result<SpectrumRun, RunError> {
    let state = scenario.build_state()?;
    let scan = scan_intensities(&state, &scenario.detector);
    Ok(SpectrumRun { state, scan })
}

/// Full phase tomography: plan, execute, reconstruct.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRun {
    pub state: BiphotonState,
    pub plan: MeasurementPlan,
    pub spectrum: PhasedSpectrum,
    pub log: AcquisitionLog,
}

impl TomographyRun {
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        let mut written = vec![
            write_file(dir, "phases.csv", self.spectrum.to_csv().as_bytes())?,
            write_file(dir, "phases.json", self.spectrum.to_json().as_bytes())?,
            write_file(
                dir,
                "state.json",
                assemble_state(&self.spectrum).to_json().as_bytes(),
            )?,
            write_file(dir, "records.csv", self.log.to_csv().as_bytes())?,
            write_file(dir, "plan.txt", self.plan.to_string().as_bytes())?,
        ];
        let assembled = assemble_state(&self.spectrum);
        match density_matrix(&assembled, Some(self.plan.root())) {
            Ok(rho) => {
                written.push(write_file(dir, "rho_re.csv", rho.csv_real().as_bytes())?);
                written.push(write_file(dir, "rho_im.csv", rho.csv_imag().as_bytes())?);
            }
            Err(ReconstructError::EmptyBasis | ReconstructError::ZeroSpectrum) => {}
            Err(_) => unreachable!("auto basis always covers the support"),
        }
        Ok(written)
    }
}

pub fn run_tomography(scenario: &Scenario) -> Result<TomographyRun, RunError> {
    let state = scenario.build_state()?;
    let scan = scan_intensities(&state, &scenario.detector);
    let measurement_plan = plan(
        scenario.plan.strategy,
        &scan.amplitudes(),
        scenario.plan.root,
        &scenario.plan.options,
    )?;
    let outcome = execute_plan(&measurement_plan, &state, &scenario.detector)?;
    Ok(TomographyRun {
        state,
        plan: measurement_plan,
        spectrum: outcome.spectrum,
        log: outcome.log,
    })
}

/// Tomography plus the per-order phase ladder fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GouyFitRun {
    pub tomography: TomographyRun,
    pub summary: BTreeMap<u32, PhaseEstimate>,
    pub fit: FitResult,
}

#[derive(Serialize)]
struct FitReport<'a> {
    slope: f64,
    intercept: f64,
    residual: f64,
    points: &'a BTreeMap<u32, PhaseEstimate>,
}

impl GouyFitRun {
    pub fn fit_json(&self) -> String {
        serde_json::to_string_pretty(&FitReport {
            slope: self.fit.slope,
            intercept: self.fit.intercept,
            residual: self.fit.residual,
            points: &self.summary,
        })
        .expect("fit serializes")
    }

    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        let mut written = self.tomography.write(dir)?;
        written.push(write_file(dir, "fit.json", self.fit_json().as_bytes())?);
        Ok(written)
    }
}

pub fn run_gouy_fit(scenario: &Scenario) -> Result<GouyFitRun, RunError> {
    let tomography = run_tomography(scenario)?;
    let summary = diagonal_phase_summary(&tomography.spectrum);
    let fit = fit_gouy_slope(&summary)?;
    Ok(GouyFitRun {
        tomography,
        summary,
        fit,
    })
}

/// One rotation angle of the prism-pair sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoveRow {
    pub eta_deg: f64,
    pub shift_plus_rad: f64,
    pub err_plus: f64,
    pub shift_minus_rad: f64,
    pub err_minus: f64,
    pub expected_plus_rad: f64,
    pub expected_minus_rad: f64,
}

/// Geometric-phase sweep of a rotated prism pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DoveSweepRun {
    pub rows: Vec<DoveRow>,
}

impl DoveSweepRun {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "eta_deg,shift_plus_rad,err_plus,shift_minus_rad,err_minus,\
             expected_plus_rad,expected_minus_rad\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.eta_deg,
                r.shift_plus_rad,
                r.err_plus,
                r.shift_minus_rad,
                r.err_minus,
                r.expected_plus_rad,
                r.expected_minus_rad
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }

    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        Ok(vec![
            write_file(dir, "dove_sweep.csv", self.to_csv().as_bytes())?,
            write_file(dir, "dove_sweep.json", self.to_json().as_bytes())?,
        ])
    }
}

/// Sweeps the prism-pair rotation, measuring the first-order antidiagonal
/// phase shifts against the unrotated baseline.
pub fn run_dove_sweep(scenario: &Scenario) -> Result<DoveSweepRun, RunError> {
    if scenario.sweep.etas_deg.is_empty() {
        return Err(ScenarioError::MissingSweep("etas_deg").into());
    }
    let mut etas = scenario.sweep.etas_deg.clone();
    if !etas.iter().any(|e| *e == 0.0) {
        etas.insert(0, 0.0);
    }
    let arm = scenario.sweep.dove_arm;
    let tomography_at = |eta_deg: f64| -> Result<PhasedSpectrum, RunError> {
        let mut with_dove = scenario.clone();
        with_dove.channels.push(Channel::Dove {
            eta_rad: eta_deg.to_radians(),
            arm,
        });
        Ok(run_tomography(&with_dove)?.spectrum)
    };
    let baseline = tomography_at(0.0)?;
    let plus = ModePair::new(1, -1);
    let minus = ModePair::new(-1, 1);
    let mut rows = Vec::with_capacity(etas.len());
    for eta_deg in etas {
        let spectrum = tomography_at(eta_deg)?;
        let eta_rad = eta_deg.to_radians();
        // Arm A advances mode m by 2 m eta; arm B acts on n instead, which
        // flips the sign pattern between the antidiagonal twins.
        let expected_plus = wrap_pi(match arm {
            Arm::A => 2.0 * eta_rad,
            Arm::B => -2.0 * eta_rad,
        });
        let expected_minus = wrap_pi(-expected_plus);
        let shift_plus = phase_shift(&spectrum, &baseline, plus);
        let shift_minus = phase_shift(&spectrum, &baseline, minus);
        let (sp, ep) = shift_plus.map(|e| (e.phase, e.err)).unwrap_or((f64::NAN, f64::NAN));
        let (sm, em) = shift_minus
            .map(|e| (e.phase, e.err))
            .unwrap_or((f64::NAN, f64::NAN));
        rows.push(DoveRow {
            eta_deg,
            shift_plus_rad: sp,
            err_plus: ep,
            shift_minus_rad: sm,
            err_minus: em,
            expected_plus_rad: expected_plus,
            expected_minus_rad: expected_minus,
        });
    }
    Ok(DoveSweepRun { rows })
}

/// One pump-phase setting of the pump sweep, for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpShiftRow {
    pub shift_rad: f64,
    pub m: i32,
    pub n: i32,
    pub measured_shift_rad: f64,
    pub err: f64,
    pub expected_shift_rad: f64,
}

/// Pump-phase transfer sweep: restructuring one pump component's phase and
/// watching it reappear on the matching diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSweepRun {
    pub rows: Vec<PumpShiftRow>,
}

impl PumpSweepRun {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("shift_rad,m,n,measured_shift_rad,err,expected_shift_rad\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.shift_rad, r.m, r.n, r.measured_shift_rad, r.err, r.expected_shift_rad
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }

    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        Ok(vec![
            write_file(dir, "pump_sweep.csv", self.to_csv().as_bytes())?,
            write_file(dir, "pump_sweep.json", self.to_json().as_bytes())?,
        ])
    }
}

pub fn run_pump_sweep(scenario: &Scenario) -> Result<PumpSweepRun, RunError> {
    if scenario.sweep.pump_shifts_rad.is_empty() {
        return Err(ScenarioError::MissingSweep("pump_shifts_rad").into());
    }
    let mut shifts = scenario.sweep.pump_shifts_rad.clone();
    if !shifts.iter().any(|s| *s == 0.0) {
        shifts.insert(0, 0.0);
    }
    let l = scenario.sweep.pump_l;
    let root = scenario.plan.root;
    let tomography_at = |shift: f64| -> Result<PhasedSpectrum, RunError> {
        let mut with_shift = scenario.clone();
        with_shift.channels.push(Channel::PumpPhase {
            l,
            shift_rad: shift,
        });
        Ok(run_tomography(&with_shift)?.spectrum)
    };
    let baseline = tomography_at(0.0)?;
    let mut rows = Vec::new();
    for shift in shifts {
        let spectrum = tomography_at(shift)?;
        for row in spectrum.rows() {
            let pair = row.pair;
            let Some(estimate) = phase_shift(&spectrum, &baseline, pair) else {
                continue;
            };
            // Measured phases are relative to the plan root. If the shifted
            // diagonal contains the root, the root moves with it, so the
            // shift shows up on every other diagonal with opposite sign.
            let on_diagonal = pair.m + pair.n == l;
            let root_on_diagonal = root.m + root.n == l;
            let expected = match (on_diagonal, root_on_diagonal) {
                (true, true) => 0.0,
                (true, false) => wrap_pi(shift),
                (false, true) => wrap_pi(-shift),
                (false, false) => 0.0,
            };
            rows.push(PumpShiftRow {
                shift_rad: shift,
                m: pair.m,
                n: pair.n,
                measured_shift_rad: estimate.phase,
                err: estimate.err,
                expected_shift_rad: expected,
            });
        }
    }
    Ok(PumpSweepRun { rows })
}

/// Rendered holograms for one stepped device of the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramRun {
    /// File name stem and rendered image, in write order.
    pub images: Vec<(String, Hologram)>,
    pub levels: u32,
}

impl HologramRun {
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.images.len());
        for (stem, hologram) in &self.images {
            let bytes = export_pgm(hologram, self.levels)
                .expect("levels validated before rendering");
            written.push(write_file(dir, &format!("{stem}.pgm"), &bytes)?);
        }
        Ok(written)
    }
}

/// Renders the analysis holograms for the scenario's hologram target: the
/// four stepped frames of the interfering arm plus the static partner arm,
/// or both bare arms when the target is the root itself.
pub fn run_hologram(scenario: &Scenario) -> Result<HologramRun, RunError> {
    let config = &scenario.hologram;
    // Validate levels early so writing cannot fail on them.
    if !(2..=65536).contains(&config.levels) {
        return Err(HologramError::BadLevels(config.levels).into());
    }
    let target = config.target;
    let root = scenario.plan.root;
    let mut images = Vec::new();
    if target == root {
        let device = DeviceSpec::bare(target.m, target.n);
        for (stem, pattern) in [("arm_a", &device.arm_a), ("arm_b", &device.arm_b)] {
            images.push((
                stem.to_string(),
                render_hologram(pattern, &config.geometry, &config.grid, config.fringe_period)?,
            ));
        }
    } else {
        let state = scenario.build_state()?;
        let scan = scan_intensities(&state, &scenario.detector);
        let measurement_plan = plan(
            scenario.plan.strategy,
            &scan.amplitudes(),
            root,
            &scenario.plan.options,
        )?;
        let edge = measurement_plan
            .edges()
            .iter()
            .find(|e| e.target == target)
            .ok_or(PlanError::Unreachable(vec![target]))?;
        let stepped_arm = edge.device.stepped_arm();
        let static_arm = match stepped_arm {
            Arm::A => Arm::B,
            Arm::B => Arm::A,
        };
        let arm_name = |arm: Arm| match arm {
            Arm::A => "arm_a",
            Arm::B => "arm_b",
        };
        for (index, phi) in PHASE_STEPS.iter().enumerate() {
            let device = edge.device.at(*phi);
            images.push((
                format!("{}_step_{}", arm_name(stepped_arm), index),
                render_hologram(
                    device.arm(stepped_arm),
                    &config.geometry,
                    &config.grid,
                    config.fringe_period,
                )?,
            ));
        }
        images.push((
            format!("{}_static", arm_name(static_arm)),
            render_hologram(
                edge.device.base().arm(static_arm),
                &config.geometry,
                &config.grid,
                config.fringe_period,
            )?,
        ));
    }
    Ok(HologramRun {
        images,
        levels: config.levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
schema = 1
name = "full"
bandwidth = 2

[pump]
components = [{ l = 0, amplitude = 1.0 }]
profile = [0.5459, 0.4483, 0.2214]

[[channel]]
kind = "gouy"
w0_mm = 2.0
lambda_nm = 812.0
z_mm = 1000.0

[[channel]]
kind = "dove"
eta_deg = 30.0
arm = "a"

[[channel]]
kind = "pump-phase"
l = 0
shift_rad = 0.5

[detector]
brightness = 500.0
repeats = 3
seed = 11
noise = "none"

[plan]
strategy = "inductive"
root = [0, 0]
epsilon = 1e-4
stepped_arm = "a"
weights = "contrast-balanced"

[sweep]
etas_deg = [0.0, 30.0]
pump_shifts_rad = [0.0, 1.5707963267948966]
pump_l = 0
dove_arm = "b"

[hologram]
width = 64
height = 48
pitch_mm = 0.1
fringe_period = 8
levels = 1024
target = [1, -1]
"#;

    #[test]
    fn full_document_parses_into_typed_settings() {
        let scenario = Scenario::from_toml(FULL).unwrap();
        assert_eq!(scenario.name, "full");
        assert_eq!(scenario.bandwidth, 2);
        assert_eq!(scenario.channels.len(), 3);
        assert_eq!(scenario.detector.brightness, 500.0);
        assert_eq!(scenario.detector.noise, NoiseModel::None);
        assert_eq!(scenario.plan.strategy, PlanStrategy::Inductive);
        assert_eq!(scenario.plan.options.stepped_arm, Arm::A);
        assert_eq!(scenario.plan.options.weights, WeightPolicy::ContrastBalanced);
        assert_eq!(scenario.sweep.dove_arm, Arm::B);
        assert_eq!(scenario.hologram.grid.width, 64);
        assert_eq!(scenario.hologram.levels, 1024);
        match &scenario.channels[1] {
            Channel::Dove { eta_rad, arm } => {
                assert!((eta_rad - 30f64.to_radians()).abs() < 1e-15);
                assert_eq!(*arm, Arm::A);
            }
            other => panic!("unexpected channel {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_kinds_are_rejected() {
        let stray = FULL.replace("[detector]", "[detector]\nunexpected = 1");
        assert!(matches!(
            Scenario::from_toml(&stray).unwrap_err(),
            ScenarioError::Toml(_)
        ));

        let bad_kind = r#"
schema = 1
name = "x"
bandwidth = 1
[pump]
components = [{ l = 0 }]
profile = [1.0, 0.5]
[[channel]]
kind = "mystery"
"#;
        assert!(matches!(
            Scenario::from_toml(bad_kind).unwrap_err(),
            ScenarioError::UnknownChannelKind(k) if k == "mystery"
        ));

        let missing = r#"
schema = 1
name = "x"
bandwidth = 1
[pump]
components = [{ l = 0 }]
profile = [1.0, 0.5]
[[channel]]
kind = "dove"
arm = "a"
"#;
        assert!(matches!(
            Scenario::from_toml(missing).unwrap_err(),
            ScenarioError::MissingChannelField { field, .. } if field == "eta_deg"
        ));

        let foreign = r#"
schema = 1
name = "x"
bandwidth = 1
[pump]
components = [{ l = 0 }]
profile = [1.0, 0.5]
[[channel]]
kind = "dove"
eta_deg = 10.0
arm = "a"
z_mm = 5.0
"#;
        assert!(matches!(
            Scenario::from_toml(foreign).unwrap_err(),
            ScenarioError::ForeignChannelField { field, .. } if field == "z_mm"
        ));

        let wrong_schema = FULL.replace("schema = 1", "schema = 2");
        assert!(matches!(
            Scenario::from_toml(&wrong_schema).unwrap_err(),
            ScenarioError::UnsupportedSchema(2)
        ));

        let bad_arm = FULL.replace("dove_arm = \"b\"", "dove_arm = \"c\"");
        assert!(matches!(
            Scenario::from_toml(&bad_arm).unwrap_err(),
            ScenarioError::BadArm(a) if a == "c"
        ));
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let minimal = r#"
schema = 1
name = "minimal"
bandwidth = 2
[pump]
components = [{ l = 0 }]
"#;
        let scenario = Scenario::from_toml(minimal).unwrap();
        assert_eq!(scenario.detector, DetectorConfig::default());
        assert_eq!(scenario.plan, PlanSetup::default());
        assert_eq!(scenario.hologram.grid.width, 1920);
        // Default profile is the embedded reference.
        assert_eq!(*scenario.pump.profile(), fixtures::reference_profile());
        assert!(scenario.sweep.etas_deg.is_empty());
    }

    fn noiseless_scenario() -> Scenario {
        let mut scenario = Scenario::reference();
        scenario.detector.noise = NoiseModel::None;
        scenario
    }

    #[test]
    fn spectrum_run_reports_unit_total() {
        let run = run_spectrum(&noiseless_scenario()).unwrap();
        let total: f64 = run.scan.entries().map(|(_, e)| e.intensity).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let csv = run.to_csv();
        assert_eq!(csv.lines().count(), 26);
        let pgm = run.heatmap_pgm();
        assert!(pgm.starts_with(b"P5\n5 5\n255\n"));
        assert_eq!(pgm.len(), b"P5\n5 5\n255\n".len() + 25);
    }

    #[test]
    fn tomography_run_recovers_channel_phases() {
        let mut scenario = noiseless_scenario();
        scenario.channels.push(Channel::Dove {
            eta_rad: 0.4,
            arm: Arm::A,
        });
        let run = run_tomography(&scenario).unwrap();
        let row = run.spectrum.get(ModePair::new(1, -1)).unwrap();
        assert!((wrap_pi(row.phase) - 0.8).abs() < 1e-9);
        let twin = run.spectrum.get(ModePair::new(-1, 1)).unwrap();
        assert!((wrap_pi(twin.phase) + 0.8).abs() < 1e-9);
    }

    #[test]
    fn dove_sweep_matches_geometric_expectation() {
        let mut scenario = noiseless_scenario();
        scenario.sweep.etas_deg = vec![0.0, 15.0, 30.0];
        scenario.sweep.dove_arm = Arm::A;
        let run = run_dove_sweep(&scenario).unwrap();
        assert_eq!(run.rows.len(), 3);
        for row in &run.rows {
            assert!(
                (row.shift_plus_rad - row.expected_plus_rad).abs() < 1e-9,
                "eta {}",
                row.eta_deg
            );
            assert!((row.shift_minus_rad - row.expected_minus_rad).abs() < 1e-9);
            // Equal and opposite twins.
            assert!((row.shift_plus_rad + row.shift_minus_rad).abs() < 1e-9);
        }
    }

    #[test]
    fn pump_sweep_moves_only_the_addressed_diagonal() {
        let mut scenario = noiseless_scenario();
        scenario.bandwidth = 1;
        scenario.pump = PumpSpec::new(
            vec![
                (0, Complex64::new(1.0, 0.0)),
                (1, Complex64::new(1.0, 0.0)),
            ],
            BTreeMap::from([(0, 1.0), (1, 0.8)]),
        )
        .unwrap();
        scenario.plan.strategy = PlanStrategy::Inductive;
        scenario.sweep.pump_shifts_rad = vec![0.0, 0.9];
        scenario.sweep.pump_l = 1;
        let run = run_pump_sweep(&scenario).unwrap();
        for row in &run.rows {
            assert!(
                (row.measured_shift_rad - row.expected_shift_rad).abs() < 1e-9,
                "shift {} mode ({}, {})",
                row.shift_rad,
                row.m,
                row.n
            );
            if row.shift_rad == 0.9 && row.m + row.n == 1 {
                assert!((row.measured_shift_rad - 0.9).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hologram_run_emits_stepped_and_static_frames() {
        let mut scenario = noiseless_scenario();
        scenario.hologram.grid = HologramGrid {
            width: 32,
            height: 24,
            pitch_mm: 0.25,
        };
        let run = run_hologram(&scenario).unwrap();
        let names: Vec<&str> = run.images.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "arm_b_step_0",
                "arm_b_step_1",
                "arm_b_step_2",
                "arm_b_step_3",
                "arm_a_static"
            ]
        );
        // Root target renders the two bare arms instead.
        scenario.hologram.target = ModePair::new(0, 0);
        let bare = run_hologram(&scenario).unwrap();
        let bare_names: Vec<&str> = bare.images.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(bare_names, vec!["arm_a", "arm_b"]);
    }
}
