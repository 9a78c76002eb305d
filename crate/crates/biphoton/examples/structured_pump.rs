//! Pump structure transfers to the two-photon state: extra pump charges
//! populate extra diagonals, every mode stays reachable by single-arm
//! interference, and a phase written onto one pump component reappears on
//! its whole diagonal.

use std::collections::BTreeMap;

use num_complex::Complex64;

use biphoton::measurement::{DetectorConfig, NoiseModel};
use biphoton::psdh::{execute_plan, plan, scan_intensities, PlanOptions, PlanStrategy};
use biphoton::state::{synthesize, ModePair, PumpSpec};

fn main() {
    // Equal parts charge 0 and charge 1, flat diagonal profile.
    let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let pump = PumpSpec::new(
        vec![(0, w), (1, w)],
        BTreeMap::from([(0, 1.0), (1, 1.0)]),
    )
    .unwrap();
    let state = synthesize(&pump, 1).unwrap();

    println!("emitted modes (two diagonals, equal weight):");
    for (pair, c) in state.modes() {
        println!("  {pair}  intensity {:.3}", c.norm_sqr());
    }

    // The inductive planner reaches all of them by single-arm unit steps.
    let config = DetectorConfig {
        noise: NoiseModel::None,
        ..DetectorConfig::default()
    };
    let scan = scan_intensities(&state, &config);
    let measurement_plan = plan(
        PlanStrategy::Inductive,
        &scan.amplitudes(),
        ModePair::new(0, 0),
        &PlanOptions::default(),
    )
    .unwrap();
    print!("\n{measurement_plan}");
    let two_arm_edges = measurement_plan.edges().iter().filter(|e| e.two_arm).count();
    println!("two-arm edges needed: {two_arm_edges}");

    // Write a phase onto the charge-1 pump component and measure again: the
    // m + n = 1 diagonal moves by exactly that phase, the rest stay put.
    let shift = 1.1;
    let shifted = state.apply_diagonal_phase(1, shift);
    let baseline = execute_plan(&measurement_plan, &state, &config).unwrap();
    let moved = execute_plan(&measurement_plan, &shifted, &config).unwrap();
    println!("\npump phase shift {shift} rad applied to charge 1:");
    for row in moved.spectrum.rows() {
        let before = baseline.spectrum.get(row.pair).unwrap().phase;
        let delta = biphoton::angles::wrap_pi(row.phase - before);
        println!(
            "  {}  moved {:+.4} rad  (diagonal {})",
            row.pair,
            delta,
            row.pair.m + row.pair.n
        );
    }
}
