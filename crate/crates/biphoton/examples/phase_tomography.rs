//! End-to-end phase tomography: plan stepped interference measurements from
//! a bare intensity scan, acquire all four-step series, and reconstruct the
//! complex spectrum relative to the root mode.

use biphoton::measurement::{DetectorConfig, NoiseModel};
use biphoton::psdh::{execute_plan, plan, scan_intensities, PlanOptions, PlanStrategy};
use biphoton::reconstruct::{assemble_state, density_matrix, fidelity};
use biphoton::state::{synthesize, Arm, ModePair};
use biphoton::{angles::wrap_pi, fixtures};

fn main() {
    // Prepare a state with structure worth measuring: the reference source
    // sent through a prism pair rotated by 0.35 rad in arm A.
    let state = synthesize(&fixtures::reference_pump(), 2)
        .unwrap()
        .apply_dove_pair(0.35, Arm::A);

    let config = DetectorConfig::default();
    let scan = scan_intensities(&state, &config);
    let measurement_plan = plan(
        PlanStrategy::Ancillary,
        &scan.amplitudes(),
        ModePair::new(0, 0),
        &PlanOptions::default(),
    )
    .unwrap();
    print!("{measurement_plan}");

    let outcome = execute_plan(&measurement_plan, &state, &config).unwrap();
    println!("\n{:>10} {:>22} {:>22}", "mode", "measured phase", "true phase");
    for row in outcome.spectrum.rows() {
        let (_, truth) = state.polar(row.pair);
        println!(
            "{:>10} {:>14.3} +/- {:.3} {:>22.3}",
            row.pair.to_string(),
            wrap_pi(row.phase),
            row.phase_err,
            wrap_pi(truth)
        );
    }

    // How close did we get? Compare reconstruction and truth as states.
    let reconstructed = assemble_state(&outcome.spectrum);
    println!(
        "\nfidelity vs prepared state: {:.4}",
        fidelity(&reconstructed, &state)
    );

    // The noiseless twin recovers the state exactly.
    let exact_config = DetectorConfig {
        noise: NoiseModel::None,
        ..config
    };
    let exact_scan = scan_intensities(&state, &exact_config);
    let exact_plan = plan(
        PlanStrategy::Ancillary,
        &exact_scan.amplitudes(),
        ModePair::new(0, 0),
        &PlanOptions::default(),
    )
    .unwrap();
    let exact = execute_plan(&exact_plan, &state, &exact_config).unwrap();
    println!(
        "noiseless fidelity:         {:.12}",
        fidelity(&assemble_state(&exact.spectrum), &state)
    );

    // Density matrix of the reconstruction, reference mode removed.
    let rho = density_matrix(&reconstructed, Some(ModePair::new(0, 0))).unwrap();
    println!("\ndensity matrix ({0}x{0}), real part:", rho.dim());
    print!("{}", rho.csv_real());
}
