//! Turning measured intensities and phases back into quantum states.
//!
//! The central record is the phased spectrum: per-mode intensity and phase
//! with propagated errors, everything relative to one root mode at phase
//! zero. From it this module assembles complex states, builds density
//! matrices over a cartesian mode basis, compares states by fidelity,
//! aggregates antidiagonal phases per order, and fits the per-order phase
//! ladder whose slope measures the differential propagation phase between
//! mode orders.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::{circular_mean, wrap_2pi, wrap_pi};
use crate::fixtures::SpectrumRow;
use crate::psdh::PhaseEstimate;
use crate::state::{BiphotonState, ModePair};

#[derive(Debug, Error, PartialEq)]
pub enum ReconstructError {
    #[error("duplicate spectrum row for mode {0}")]
    DuplicateMode(ModePair),
    #[error("spectrum carries no intensity")]
    ZeroSpectrum,
    #[error("no modes left to span a density matrix basis")]
    EmptyBasis,
    #[error("support mode {0} is not contained in the supplied basis")]
    MissingFromBasis(ModePair),
    #[error("need at least one aggregated phase point to fit a slope")]
    InsufficientPoints,
}

/// One reconstructed mode: intensity and phase with standard errors, the
/// phase reported in `[0, 2pi)` relative to the root mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasedRow {
    pub pair: ModePair,
    pub intensity: f64,
    pub intensity_err: f64,
    pub phase: f64,
    pub phase_err: f64,
}

impl From<SpectrumRow> for PhasedRow {
    fn from(row: SpectrumRow) -> Self {
        Self {
            pair: ModePair::new(row.m, row.n),
            intensity: row.intensity,
            intensity_err: row.intensity_err,
            phase: wrap_2pi(row.phase),
            phase_err: row.phase_err,
        }
    }
}

/// A full phase-resolved mode spectrum in deterministic `(m, n)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedSpectrum {
    rows: BTreeMap<ModePair, PhasedRow>,
}

impl PhasedSpectrum {
    pub fn from_rows(rows: Vec<PhasedRow>) -> Result<Self, ReconstructError> {
        let mut map = BTreeMap::new();
        for row in rows {
            if map.insert(row.pair, row).is_some() {
                return Err(ReconstructError::DuplicateMode(row.pair));
            }
        }
        Ok(Self { rows: map })
    }

    pub fn rows(&self) -> impl Iterator<Item = &PhasedRow> {
        self.rows.values()
    }

    pub fn get(&self, pair: ModePair) -> Option<&PhasedRow> {
        self.rows.get(&pair)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_intensity(&self) -> f64 {
        self.rows.values().map(|r| r.intensity).sum()
    }

    /// Rescales intensities (and their errors) to unit total.
    pub fn normalized(&self) -> Result<Self, ReconstructError> {
        let total = self.total_intensity();
        if total <= 0.0 {
            return Err(ReconstructError::ZeroSpectrum);
        }
        let rows = self
            .rows
            .values()
            .map(|r| PhasedRow {
                intensity: r.intensity / total,
                intensity_err: r.intensity_err / total,
                ..*r
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,intensity,intensity_err,phase,phase_err\n");
        for r in self.rows.values() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.pair.m, r.pair.n, r.intensity, r.intensity_err, r.phase, r.phase_err
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<SpectrumRow> = self
            .rows
            .values()
            .map(|r| SpectrumRow {
                m: r.pair.m,
                n: r.pair.n,
                intensity: r.intensity,
                intensity_err: r.intensity_err,
                phase: r.phase,
                phase_err: r.phase_err,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("spectrum records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let records: Vec<SpectrumRow> = serde_json::from_str(text)?;
        Ok(Self::from_rows(records.into_iter().map(PhasedRow::from).collect())
            .expect("parsed rows are unique"))
    }
}

/// Builds the complex state the spectrum describes, coefficient by
/// coefficient as `sqrt(I) exp(i phase)`, exactly as tabulated (no
/// renormalization).
pub fn assemble_state(spectrum: &PhasedSpectrum) -> BiphotonState {
    let bandwidth = spectrum
        .rows()
        .map(|r| r.pair.m.unsigned_abs().max(r.pair.n.unsigned_abs()))
        .max()
        .unwrap_or(0);
    BiphotonState::from_coefficients(
        spectrum.rows().map(|r| {
            (
                r.pair,
                Complex64::from_polar(r.intensity.max(0.0).sqrt(), r.phase),
            )
        }),
        bandwidth,
    )
    .expect("rows fit the inferred bandwidth")
}

/// Pure-state density matrix `rho = |psi><psi|` over an explicit mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: Vec<ModePair>,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ModePair] {
        &self.basis
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.basis.len() + col]
    }

    /// Element addressed by basis labels instead of indices.
    pub fn by_pairs(&self, row: ModePair, col: ModePair) -> Option<Complex64> {
        let i = self.basis.iter().position(|p| *p == row)?;
        let j = self.basis.iter().position(|p| *p == col)?;
        Some(self.at(i, j))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.at(i, i)).sum()
    }

    fn csv_part(&self, pick: impl Fn(Complex64) -> f64) -> String {
        let label = |p: &ModePair| format!("\"({:+},{:+})\"", p.m, p.n);
        let mut out = String::new();
        out.push_str(&std::iter::once(String::new())
            .chain(self.basis.iter().map(|p| label(p)))
            .collect::<Vec<_>>()
            .join(","));
        out.push('\n');
        for i in 0..self.dim() {
            let mut cells = vec![label(&self.basis[i])];
            for j in 0..self.dim() {
                cells.push(pick(self.at(i, j)).to_string());
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Real part as a labeled CSV grid.
    pub fn csv_real(&self) -> String {
        self.csv_part(|c| c.re)
    }

    /// Imaginary part as a labeled CSV grid.
    pub fn csv_imag(&self) -> String {
        self.csv_part(|c| c.im)
    }
}

fn density_from_basis(
    state: &BiphotonState,
    basis: Vec<ModePair>,
    exclude: Option<ModePair>,
) -> Result<DensityMatrix, ReconstructError> {
    let mut vector: Vec<Complex64> = basis.iter().map(|p| state.coeff(*p)).collect();
    if let Some(root) = exclude {
        for (p, v) in basis.iter().zip(vector.iter_mut()) {
            if *p == root {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
    let norm: f64 = vector.iter().map(|c| c.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(ReconstructError::ZeroSpectrum);
    }
    let scale = norm.sqrt().recip();
    for v in &mut vector {
        *v *= scale;
    }
    let dim = basis.len();
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            data[i * dim + j] = vector[i] * vector[j].conj();
        }
    }
    Ok(DensityMatrix { basis, data })
}

/// Density matrix over the cartesian product of the single-photon indices
/// present in the state (optionally excluding one reference mode first),
/// each axis ordered by descending index; the retained amplitudes are
/// normalized so the matrix has unit trace.
pub fn density_matrix(
    state: &BiphotonState,
    exclude: Option<ModePair>,
) -> Result<DensityMatrix, ReconstructError> {
    let support: Vec<ModePair> = state
        .modes()
        .map(|(p, _)| p)
        .filter(|p| Some(*p) != exclude)
        .collect();
    if support.is_empty() {
        return Err(ReconstructError::EmptyBasis);
    }
    let mut ms: Vec<i32> = support.iter().map(|p| p.m).collect();
    let mut ns: Vec<i32> = support.iter().map(|p| p.n).collect();
    ms.sort_unstable_by(|a, b| b.cmp(a));
    ms.dedup();
    ns.sort_unstable_by(|a, b| b.cmp(a));
    ns.dedup();
    let basis: Vec<ModePair> = ms
        .iter()
        .flat_map(|m| ns.iter().map(|n| ModePair::new(*m, *n)))
        .collect();
    density_from_basis(state, basis, exclude)
}

/// Density matrix over a caller-supplied basis; every supported mode of the
/// state (after exclusion) must appear in it.
pub fn density_matrix_with_basis(
    state: &BiphotonState,
    basis: &[ModePair],
    exclude: Option<ModePair>,
) -> Result<DensityMatrix, ReconstructError> {
    for (p, _) in state.modes() {
        if Some(p) != exclude && !basis.contains(&p) {
            return Err(ReconstructError::MissingFromBasis(p));
        }
    }
    density_from_basis(state, basis.to_vec(), exclude)
}

/// Squared overlap of the normalized states; invariant under global phase
/// and under input scaling. Zero if either state is empty.
pub fn fidelity(a: &BiphotonState, b: &BiphotonState) -> f64 {
    let na = a.total_intensity();
    let nb = b.total_intensity();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let overlap: Complex64 = a
        .modes()
        .map(|(p, ca)| ca.conj() * b.coeff(p))
        .sum();
    overlap.norm_sqr() / (na * nb)
}

/// Aggregates the measured antidiagonal phases (`n = -m`, `m != 0`) into one
/// inverse-variance circular mean per order `|m|`, with the combined error.
pub fn diagonal_phase_summary(spectrum: &PhasedSpectrum) -> BTreeMap<u32, PhaseEstimate> {
    let mut groups: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for row in spectrum.rows() {
        if row.pair.m != 0 && row.pair.n == -row.pair.m {
            groups
                .entry(row.pair.m.unsigned_abs())
                .or_default()
                .push((row.phase, row.phase_err));
        }
    }
    groups
        .into_iter()
        .map(|(order, entries)| {
            let phase = circular_mean(&entries);
            let err = if entries.iter().any(|(_, e)| *e == 0.0) {
                0.0
            } else {
                entries
                    .iter()
                    .map(|(_, e)| e.powi(-2))
                    .sum::<f64>()
                    .powf(-0.5)
            };
            (order, PhaseEstimate { phase, err })
        })
        .collect()
}

/// A fitted phase-versus-order line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Phase advance per order step, in radians within `(-pi, pi]`.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the accepted branch assignment.
    pub residual: f64,
}

/// Fits a line through the aggregated antidiagonal phases versus order.
///
/// Phases are only known modulo 2pi, so every point may sit on a shifted
/// branch: all branch assignments within two turns are tried, each fitted by
/// unweighted least squares through the points plus the implicit root point
/// `(0, 0)`. Assignments whose slope leaves `(-pi, pi]` are discarded (a
/// differential propagation phase per order cannot exceed half a turn);
/// among the rest the smallest residual wins, with the smallest total branch
/// shift breaking ties.
pub fn fit_gouy_slope(
    points: &BTreeMap<u32, PhaseEstimate>,
) -> Result<FitResult, ReconstructError> {
    if points.is_empty() {
        return Err(ReconstructError::InsufficientPoints);
    }
    let xs: Vec<f64> = std::iter::once(0.0)
        .chain(points.keys().map(|k| *k as f64))
        .collect();
    let bases: Vec<f64> = points.values().map(|e| wrap_pi(e.phase)).collect();
    let n_points = bases.len();
    let mut best: Option<(FitResult, f64, Vec<i32>)> = None;

    let total = 5usize.pow(n_points as u32);
    for assignment in 0..total {
        let mut ks = Vec::with_capacity(n_points);
        let mut code = assignment;
        for _ in 0..n_points {
            ks.push((code % 5) as i32 - 2);
            code /= 5;
        }
        let ys: Vec<f64> = std::iter::once(0.0)
            .chain(
                bases
                    .iter()
                    .zip(&ks)
                    .map(|(b, k)| b + std::f64::consts::TAU * *k as f64),
            )
            .collect();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let denom = n * sxx - sx * sx;
        if denom == 0.0 {
            continue;
        }
        let slope = (n * sxy - sx * sy) / denom;
        if slope <= -std::f64::consts::PI || slope > std::f64::consts::PI {
            continue;
        }
        let intercept = (sy - slope * sx) / n;
        let residual = (xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let shift_cost: f64 = ks.iter().map(|k| k.abs() as f64).sum();
        let candidate = (
            FitResult {
                slope,
                intercept,
                residual,
            },
            shift_cost,
            ks,
        );
        let better = match &best {
            None => true,
            Some((current, cost, old_ks)) => {
                candidate.0.residual < current.residual
                    || (candidate.0.residual == current.residual
                        && (candidate.1 < *cost
                            || (candidate.1 == *cost && candidate.2 < *old_ks)))
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    best.map(|(fit, _, _)| fit)
        .ok_or(ReconstructError::InsufficientPoints)
}

/// Phase shift of one mode between a spectrum and a baseline spectrum,
/// wrapped to `(-pi, pi]`, with both errors combined.
pub fn phase_shift(
    spectrum: &PhasedSpectrum,
    baseline: &PhasedSpectrum,
    pair: ModePair,
) -> Option<PhaseEstimate> {
    let now = spectrum.get(pair)?;
    let base = baseline.get(pair)?;
    Some(PhaseEstimate {
        phase: wrap_pi(now.phase - base.phase),
        err: (now.phase_err.powi(2) + base.phase_err.powi(2)).sqrt(),
    })
}
