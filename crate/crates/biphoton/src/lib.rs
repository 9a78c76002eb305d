//! Digital twin of phase-resolved biphoton tomography.
//!
//! Simulates coincidence measurements on photon pairs entangled in the
//! Laguerre-Gaussian (orbital angular momentum) basis and retrieves the full
//! complex two-photon state: mode intensities from bare projective settings,
//! per-mode phases from common-path interference with four-step phase
//! shifting, and a reconstruction layer that assembles density matrices,
//! Gouy-phase slope fits, and Dove-prism geometric-phase series.
//!
//! The crate is organized as a pipeline:
//!
//! * [`modes`] — scalar Laguerre-Gaussian fields, sampled grids, overlaps
//! * [`state`] — sparse two-photon states, pump synthesis, phase channels
//! * [`measurement`] — projective devices, coincidence probabilities, counts
//! * [`psdh`] — phase-step series, measurement planners, plan execution
//! * [`reconstruct`] — state assembly, density matrices, slope fits
//! * [`holograms`] — amplitude-modulated SLM gratings and PGM export
//! * [`scenario`] — declarative scenario files and the run pipeline
//!
//! Each major capability has a runnable demo under `examples/`; the `biphoton`
//! binary exposes the same pipeline as subcommands driven by scenario files.

pub mod angles;
pub mod fixtures;
pub mod holograms;
pub mod measurement;
pub mod modes;
pub mod psdh;
pub mod reconstruct;
pub mod scenario;
pub mod state;

pub use num_complex::Complex64;
