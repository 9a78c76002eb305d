//! Four-step interferometric phase retrieval and measurement planning.
//!
//! Phase-shifting digital holography adapted to coincidence counting: a
//! device holding a target/reference superposition is stepped through the
//! reference phases 0, pi/2, pi and 3pi/2, and the four mean counts combine
//! into the relative phase between the two projected coefficients together
//! with a propagated error.
//!
//! Planning decides which stepped devices to run so that every mode of a
//! state's support gets a phase relative to one root mode. The ancillary
//! strategy interferes every mode directly with the root inside one two-arm
//! device and needs the root to share no index with any other mode. The
//! inductive strategy chains unit steps of a single index through one arm's
//! superposition, falling back to two-arm jumps when no adjacent mode is
//! known yet, and so covers supports the ancillary scheme cannot.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::wrap_2pi;
use crate::measurement::{
    acquire, ArmPattern, CoincidenceRecord, DetectorConfig, DeviceError, DeviceSpec,
    SteppedDevice,
};
use crate::reconstruct::{PhasedRow, PhasedSpectrum};
use crate::state::{Arm, BiphotonState, ModePair};

/// Reference phases applied in order during one retrieval series.
pub const PHASE_STEPS: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

#[derive(Debug, Error, PartialEq)]
pub enum PsdhError {
    #[error("no interference contrast: both fringe quadratures vanish")]
    NoContrast,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("root mode {0} carries no measurable intensity")]
    RootMissing(ModePair),
    #[error("mode {mode} shares an index with root {root}, preventing direct interference")]
    SharedIndexWithRoot { mode: ModePair, root: ModePair },
    #[error(
        "cross term {cross} of target {target} leaks {leakage:.3e}, over the budget {budget:.3e}"
    )]
    CrossTalk {
        target: ModePair,
        cross: ModePair,
        leakage: f64,
        budget: f64,
    },
    #[error("no chain of feasible devices reaches: {}", format_pairs(.0))]
    Unreachable(Vec<ModePair>),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecuteError {
    #[error("no interference contrast while measuring {0}")]
    NoContrast(ModePair),
    #[error("edge for {target} references {reference} before it was measured")]
    DanglingReference {
        target: ModePair,
        reference: ModePair,
    },
}

fn format_pairs(pairs: &[ModePair]) -> String {
    pairs
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// The four records of one stepped acquisition, ordered as [`PHASE_STEPS`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStepSeries {
    pub records: [CoincidenceRecord; 4],
}

impl PhaseStepSeries {
    /// Synthetic series from four single-window counts, for direct use of
    /// the retrieval formula.
    pub fn from_means(means: [f64; 4]) -> Self {
        Self {
            records: means.map(|m| CoincidenceRecord { samples: vec![m] }),
        }
    }
}

/// Retrieved relative phase in `[0, 2pi)` with its propagated error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub phase: f64,
    pub err: f64,
}

/// Combines four phase-stepped mean counts into the relative phase of the
/// interfering coefficients.
///
/// With fringe `I(phi) = A + B cos(delta + phi)` the two quadratures are
/// `x = I(0) - I(pi)` and `y = I(pi/2) - I(3pi/2)`, and `delta = -atan2(y, x)`
/// mapped into `[0, 2pi)`. The error propagates the per-record standard
/// deviations through that expression.
pub fn psdh_phase(series: &PhaseStepSeries) -> Result<PhaseEstimate, PsdhError> {
    let mean: Vec<f64> = series.records.iter().map(|r| r.mean()).collect();
    let std: Vec<f64> = series.records.iter().map(|r| r.std()).collect();
    let x = mean[0] - mean[2];
    let y = mean[1] - mean[3];
    // Vanishing quadratures, judged against the count level so that float
    // rounding of a genuinely flat fringe cannot masquerade as contrast.
    if x.hypot(y) <= 1e-12 * mean.iter().sum::<f64>().abs() {
        return Err(PsdhError::NoContrast);
    }
    let phase = wrap_2pi(-y.atan2(x));
    let sx2 = std[0] * std[0] + std[2] * std[2];
    let sy2 = std[1] * std[1] + std[3] * std[3];
    let denom = x * x + y * y;
    let err = (x * x * sy2 + y * y * sx2).sqrt() / denom;
    Ok(PhaseEstimate { phase, err })
}

/// Runs the four stepped settings of `device` and collects their records.
pub fn acquire_series(
    device: &SteppedDevice,
    state: &BiphotonState,
    config: &DetectorConfig,
) -> PhaseStepSeries {
    PhaseStepSeries {
        records: PHASE_STEPS.map(|phi| acquire(&device.at(phi), state, config)),
    }
}

/// Measured amplitudes `a = sqrt(I)` keyed by mode, the planner's input.
pub type AmplitudeMap = BTreeMap<ModePair, f64>;

/// Amplitude map of a known state, for planning without measurement.
pub fn amplitudes_from_state(state: &BiphotonState) -> AmplitudeMap {
    state.modes().map(|(p, c)| (p, c.norm())).collect()
}

/// How target/reference device weights are chosen per edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPolicy {
    /// Fixed splits by target order: 0.60/0.40 at first order, 0.85/0.15 at
    /// second order, and an even split beyond.
    OrderPresets,
    /// Weights chosen from measured amplitudes so both fringe terms carry
    /// equal magnitude, maximizing contrast edge by edge.
    ContrastBalanced,
}

/// Planner knobs shared by both strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    /// Cross-term leakage budget relative to the weaker fringe term.
    pub epsilon: f64,
    /// Which arm steps its reference phase in two-arm devices.
    pub stepped_arm: Arm,
    pub weights: WeightPolicy,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            stepped_arm: Arm::B,
            weights: WeightPolicy::OrderPresets,
        }
    }
}

/// Planning strategy selector, for configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanStrategy {
    Ancillary,
    Inductive,
}

/// One stepped acquisition: measures `target`'s phase relative to
/// `reference`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEdge {
    pub target: ModePair,
    pub reference: ModePair,
    pub device: SteppedDevice,
    pub two_arm: bool,
}

/// Ordered stepped acquisitions rooted at one reference mode; every edge's
/// reference is the root or an earlier target.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    root: ModePair,
    edges: Vec<PlanEdge>,
}

impl MeasurementPlan {
    pub fn root(&self) -> ModePair {
        self.root
    }

    pub fn edges(&self) -> &[PlanEdge] {
        &self.edges
    }
}

impl std::fmt::Display for MeasurementPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "plan: root {}, {} edge(s)",
            self.root,
            self.edges.len()
        )?;
        for (i, e) in self.edges.iter().enumerate() {
            writeln!(
                f,
                "  {:>3}. {} <- {}  [{}]  step {:?}  {}",
                i + 1,
                e.target,
                e.reference,
                if e.two_arm { "two-arm" } else { "one-arm" },
                e.device.stepped_arm(),
                e.device.base(),
            )?;
        }
        Ok(())
    }
}

fn support_of(amplitudes: &AmplitudeMap) -> Vec<ModePair> {
    let mut support: Vec<ModePair> = amplitudes
        .iter()
        .filter(|(_, a)| **a > 0.0)
        .map(|(p, _)| *p)
        .collect();
    support.sort_by_key(|p| p.bfs_key());
    support
}

fn weight_split(
    policy: WeightPolicy,
    target: ModePair,
    a_target: f64,
    a_reference: f64,
    two_arm: bool,
) -> (f64, f64) {
    match policy {
        WeightPolicy::OrderPresets => {
            match target.m.unsigned_abs().max(target.n.unsigned_abs()) {
                1 => (0.60, 0.40),
                2 => (0.85, 0.15),
                _ => (0.5, 0.5),
            }
        }
        WeightPolicy::ContrastBalanced => {
            let ratio = a_reference / a_target;
            let s = if two_arm { ratio.sqrt() } else { ratio };
            (s / (1.0 + s), 1.0 / (1.0 + s))
        }
    }
}

/// Leakage check for a two-arm device: both cross products must stay below
/// `epsilon` times the weaker fringe term.
fn cross_talk(
    target: ModePair,
    reference: ModePair,
    d_t: f64,
    d_r: f64,
    amplitudes: &AmplitudeMap,
    epsilon: f64,
) -> Option<(ModePair, f64, f64)> {
    let a_t = amplitudes.get(&target).copied().unwrap_or(0.0);
    let a_r = amplitudes.get(&reference).copied().unwrap_or(0.0);
    let budget = epsilon * (d_t * d_t * a_t).min(d_r * d_r * a_r);
    for cross in [
        ModePair::new(target.m, reference.n),
        ModePair::new(reference.m, target.n),
    ] {
        let leak = d_t * d_r * amplitudes.get(&cross).copied().unwrap_or(0.0);
        if leak >= budget {
            return Some((cross, leak, budget));
        }
    }
    None
}

fn two_arm_edge(
    target: ModePair,
    reference: ModePair,
    amplitudes: &AmplitudeMap,
    options: &PlanOptions,
) -> Result<PlanEdge, DeviceError> {
    let (d_t, d_r) = weight_split(
        options.weights,
        target,
        amplitudes[&target],
        amplitudes[&reference],
        true,
    );
    let device = DeviceSpec {
        arm_a: ArmPattern::with_reference(target.m, d_t, reference.m, d_r, 0.0)?,
        arm_b: ArmPattern::with_reference(target.n, d_t, reference.n, d_r, 0.0)?,
    };
    Ok(PlanEdge {
        target,
        reference,
        device: SteppedDevice::new(device, options.stepped_arm, 1)?,
        two_arm: true,
    })
}

fn single_arm_edge(
    target: ModePair,
    reference: ModePair,
    amplitudes: &AmplitudeMap,
    options: &PlanOptions,
) -> Result<PlanEdge, DeviceError> {
    let (d_t, d_r) = weight_split(
        options.weights,
        target,
        amplitudes[&target],
        amplitudes[&reference],
        false,
    );
    // The arm whose index differs carries the superposition and the step.
    let (device, arm) = if target.n == reference.n {
        (
            DeviceSpec {
                arm_a: ArmPattern::with_reference(target.m, d_t, reference.m, d_r, 0.0)?,
                arm_b: ArmPattern::single(target.n),
            },
            Arm::A,
        )
    } else {
        (
            DeviceSpec {
                arm_a: ArmPattern::single(target.m),
                arm_b: ArmPattern::with_reference(target.n, d_t, reference.n, d_r, 0.0)?,
            },
            Arm::B,
        )
    };
    Ok(PlanEdge {
        target,
        reference,
        device: SteppedDevice::new(device, arm, 1)?,
        two_arm: false,
    })
}

/// Plans direct interference of every support mode with `root` through
/// two-arm devices.
///
/// Requires the root to share no single-photon index with any other support
/// mode, and every device's cross terms to stay inside the leakage budget;
/// a single-mode support yields a valid empty plan.
pub fn plan_ancillary(
    amplitudes: &AmplitudeMap,
    root: ModePair,
    options: &PlanOptions,
) -> Result<MeasurementPlan, PlanError> {
    let support = support_of(amplitudes);
    if !support.contains(&root) {
        return Err(PlanError::RootMissing(root));
    }
    let targets: Vec<ModePair> = support.into_iter().filter(|p| *p != root).collect();
    for p in &targets {
        if p.m == root.m || p.n == root.n {
            return Err(PlanError::SharedIndexWithRoot { mode: *p, root });
        }
    }
    let mut edges = Vec::with_capacity(targets.len());
    for target in targets {
        let (d_t, d_r) = weight_split(
            options.weights,
            target,
            amplitudes[&target],
            amplitudes[&root],
            true,
        );
        if let Some((cross, leakage, budget)) =
            cross_talk(target, root, d_t, d_r, amplitudes, options.epsilon)
        {
            return Err(PlanError::CrossTalk {
                target,
                cross,
                leakage,
                budget,
            });
        }
        edges.push(two_arm_edge(target, root, amplitudes, options)?);
    }
    Ok(MeasurementPlan { root, edges })
}

/// Reference preference: lowest total order first, then the smaller `|m|`,
/// then signed indices for determinism.
fn reference_rank(p: ModePair) -> (u32, u32, i32, i32) {
    (p.order(), p.m.unsigned_abs(), p.m, p.n)
}

fn best_adjacent_reference(target: ModePair, known: &BTreeSet<ModePair>) -> Option<ModePair> {
    known
        .iter()
        .copied()
        .filter(|q| {
            (q.m == target.m && (q.n - target.n).abs() == 1)
                || (q.n == target.n && (q.m - target.m).abs() == 1)
        })
        .min_by_key(|q| reference_rank(*q))
}

fn best_jump_reference(
    target: ModePair,
    known: &BTreeSet<ModePair>,
    amplitudes: &AmplitudeMap,
    options: &PlanOptions,
) -> Option<ModePair> {
    known
        .iter()
        .copied()
        .filter(|q| {
            if q.m == target.m || q.n == target.n {
                return false;
            }
            let (d_t, d_r) = weight_split(
                options.weights,
                target,
                amplitudes[&target],
                amplitudes[q],
                true,
            );
            cross_talk(target, *q, d_t, d_r, amplitudes, options.epsilon).is_none()
        })
        .min_by_key(|q| reference_rank(*q))
}

/// Plans a chain of single-index unit steps from `root` through the support,
/// using two-arm jumps only where no unit step can reach.
///
/// Modes reachable by neither kind of edge make the plan fail with the full
/// list of stranded modes.
pub fn plan_inductive(
    amplitudes: &AmplitudeMap,
    root: ModePair,
    options: &PlanOptions,
) -> Result<MeasurementPlan, PlanError> {
    let support = support_of(amplitudes);
    if !support.contains(&root) {
        return Err(PlanError::RootMissing(root));
    }
    let targets: Vec<ModePair> = support.into_iter().filter(|p| *p != root).collect();
    let mut known: BTreeSet<ModePair> = BTreeSet::from([root]);
    let mut edges = Vec::with_capacity(targets.len());
    loop {
        let mut progressed = false;
        // Exhaust unit steps before considering any jump.
        loop {
            let mut stepped = false;
            let pending: Vec<ModePair> = targets
                .iter()
                .copied()
                .filter(|p| !known.contains(p))
                .collect();
            for target in pending {
                if let Some(reference) = best_adjacent_reference(target, &known) {
                    edges.push(single_arm_edge(target, reference, amplitudes, options)?);
                    known.insert(target);
                    stepped = true;
                    progressed = true;
                }
            }
            if !stepped {
                break;
            }
        }
        // One jump, then try unit steps again from the enlarged set.
        let next_jump = targets
            .iter()
            .copied()
            .filter(|p| !known.contains(p))
            .find_map(|target| {
                best_jump_reference(target, &known, amplitudes, options)
                    .map(|reference| (target, reference))
            });
        if let Some((target, reference)) = next_jump {
            edges.push(two_arm_edge(target, reference, amplitudes, options)?);
            known.insert(target);
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    let stranded: Vec<ModePair> = targets
        .iter()
        .copied()
        .filter(|p| !known.contains(p))
        .collect();
    if !stranded.is_empty() {
        return Err(PlanError::Unreachable(stranded));
    }
    Ok(MeasurementPlan { root, edges })
}

/// Plans with the selected strategy.
pub fn plan(
    strategy: PlanStrategy,
    amplitudes: &AmplitudeMap,
    root: ModePair,
    options: &PlanOptions,
) -> Result<MeasurementPlan, PlanError> {
    match strategy {
        PlanStrategy::Ancillary => plan_ancillary(amplitudes, root, options),
        PlanStrategy::Inductive => plan_inductive(amplitudes, root, options),
    }
}

/// Per-mode result of a bare coincidence scan over the full index grid,
/// normalized so all entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub record: CoincidenceRecord,
    pub intensity: f64,
    pub err: f64,
}

/// Bare-device intensity scan over every `(m, n)` within the bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityScan {
    entries: BTreeMap<ModePair, ScanEntry>,
    total_counts: f64,
}

impl IntensityScan {
    pub fn entries(&self) -> impl Iterator<Item = (ModePair, &ScanEntry)> {
        self.entries.iter().map(|(p, e)| (*p, e))
    }

    pub fn get(&self, pair: ModePair) -> Option<&ScanEntry> {
        self.entries.get(&pair)
    }

    pub fn total_counts(&self) -> f64 {
        self.total_counts
    }

    /// Amplitudes of every mode that registered counts.
    pub fn amplitudes(&self) -> AmplitudeMap {
        self.entries
            .iter()
            .filter(|(_, e)| e.intensity > 0.0)
            .map(|(p, e)| (*p, e.intensity.sqrt()))
            .collect()
    }
}

/// Scans bare coincidences for every mode pair within the state's bandwidth
/// and normalizes over the grid total.
pub fn scan_intensities(state: &BiphotonState, config: &DetectorConfig) -> IntensityScan {
    let bw = state.bandwidth() as i32;
    let mut records: BTreeMap<ModePair, CoincidenceRecord> = BTreeMap::new();
    for m in -bw..=bw {
        for n in -bw..=bw {
            let pair = ModePair::new(m, n);
            records.insert(pair, acquire(&DeviceSpec::bare(m, n), state, config));
        }
    }
    let total: f64 = records.values().map(|r| r.mean()).sum();
    let entries = records
        .into_iter()
        .map(|(pair, record)| {
            let (intensity, err) = if total > 0.0 {
                (record.mean() / total, record.std() / total)
            } else {
                (0.0, 0.0)
            };
            (
                pair,
                ScanEntry {
                    record,
                    intensity,
                    err,
                },
            )
        })
        .collect();
    IntensityScan {
        entries,
        total_counts: total,
    }
}

/// One logged acquisition: which device ran, at which step, and its counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub context: String,
    pub device: u64,
    pub step: Option<f64>,
    pub record: CoincidenceRecord,
}

/// Every acquisition behind one tomography run, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcquisitionLog {
    pub rows: Vec<LogRow>,
}

impl AcquisitionLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("context,device,step_rad,mean,std,samples\n");
        for row in &self.rows {
            let step = row
                .step
                .map(|s| s.to_string())
                .unwrap_or_default();
            let samples = row
                .record
                .samples
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{:016x},{},{},{},{}\n",
                row.context,
                row.device,
                step,
                row.record.mean(),
                row.record.std(),
                samples
            ));
        }
        out
    }
}

/// A tomography run's products: the phased spectrum and the raw count log.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyOutcome {
    pub spectrum: PhasedSpectrum,
    pub log: AcquisitionLog,
}

/// Runs a plan against a state: a bare intensity scan over the whole grid,
/// then one four-step series per edge, accumulating phases from the root
/// outward (errors add in quadrature along each chain).
pub fn execute_plan(
    plan: &MeasurementPlan,
    state: &BiphotonState,
    config: &DetectorConfig,
) -> Result<TomographyOutcome, ExecuteError> {
    let scan = scan_intensities(state, config);
    let mut log = AcquisitionLog::default();
    for (pair, entry) in scan.entries() {
        log.rows.push(LogRow {
            context: format!("bare {pair}"),
            device: DeviceSpec::bare(pair.m, pair.n).fingerprint(),
            step: None,
            record: entry.record.clone(),
        });
    }

    let mut phases: BTreeMap<ModePair, (f64, f64)> = BTreeMap::new();
    phases.insert(plan.root(), (0.0, 0.0));
    for edge in plan.edges() {
        let series = acquire_series(&edge.device, state, config);
        for (phi, record) in PHASE_STEPS.iter().zip(series.records.iter()) {
            log.rows.push(LogRow {
                context: format!("edge {} <- {}", edge.target, edge.reference),
                device: edge.device.at(*phi).fingerprint(),
                step: Some(*phi),
                record: record.clone(),
            });
        }
        let estimate = psdh_phase(&series).map_err(|_| ExecuteError::NoContrast(edge.target))?;
        let (ref_phase, ref_err) =
            *phases
                .get(&edge.reference)
                .ok_or(ExecuteError::DanglingReference {
                    target: edge.target,
                    reference: edge.reference,
                })?;
        phases.insert(
            edge.target,
            (
                wrap_2pi(ref_phase + estimate.phase),
                (ref_err * ref_err + estimate.err * estimate.err).sqrt(),
            ),
        );
    }

    let rows: Vec<PhasedRow> = phases
        .into_iter()
        .map(|(pair, (phase, phase_err))| {
            let (intensity, err) = scan
                .get(pair)
                .map(|e| (e.intensity, e.err))
                .unwrap_or((0.0, 0.0));
            PhasedRow {
                pair,
                intensity,
                intensity_err: err,
                phase,
                phase_err,
            }
        })
        .collect();
    let spectrum = PhasedSpectrum::from_rows(rows).expect("plan targets are unique");
    Ok(TomographyOutcome { spectrum, log })
}
