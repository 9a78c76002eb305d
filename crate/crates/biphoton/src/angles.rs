//! Angle wrapping helpers shared across the retrieval pipeline.

use std::f64::consts::{PI, TAU};

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_2pi(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Inverse-variance weighted circular mean, returned in `(-π, π]`.
///
/// Entries with zero error are treated as exact: if any are present they are
/// averaged with equal weight and the rest are ignored.
pub fn circular_mean(entries: &[(f64, f64)]) -> f64 {
    let exact: Vec<f64> = entries
        .iter()
        .filter(|(_, e)| *e == 0.0)
        .map(|(p, _)| *p)
        .collect();
    let (mut sx, mut sy) = (0.0, 0.0);
    if exact.is_empty() {
        for (p, e) in entries {
            let w = 1.0 / (e * e);
            sx += w * p.cos();
            sy += w * p.sin();
        }
    } else {
        for p in &exact {
            sx += p.cos();
            sy += p.sin();
        }
    }
    wrap_pi(sy.atan2(sx))
}
