//! Bare coincidence spectra: what the two-photon source looks like before
//! any phase information is extracted.

use biphoton::fixtures;
use biphoton::measurement::{acquire, DetectorConfig, DeviceSpec, NoiseModel};
use biphoton::state::synthesize;

fn main() {
    // The embedded reference spectra, one per pump waist.
    for (label, rows) in [
        ("w0 = 2.0 mm", fixtures::spectrum_w0_2mm()),
        ("w0 = 1.0 mm", fixtures::spectrum_w0_1mm()),
    ] {
        println!("reference spectrum, {label}:");
        for row in rows {
            println!(
                "  ({:+}, {:+})  intensity {:.3} +/- {:.3}   phase {:+.2} +/- {:.2}",
                row.m, row.n, row.intensity, row.intensity_err, row.phase, row.phase_err
            );
        }
        println!();
    }

    // Synthesize the matching source and read it out with bare projectors.
    let pump = fixtures::reference_pump();
    let state = synthesize(&pump, 2).unwrap();
    let exact = DetectorConfig {
        noise: NoiseModel::None,
        ..DetectorConfig::default()
    };
    println!("synthesized diagonal, exact projector means (relative):");
    let root = acquire(&DeviceSpec::bare(0, 0), &state, &exact).mean();
    for m in -2..=2i32 {
        let device = DeviceSpec::bare(m, -m);
        let mean = acquire(&device, &state, &exact).mean();
        println!("  ({:+}, {:+})  {:.4}", m, -m, mean / root);
    }

    // The same readout with photon counting noise at finite brightness.
    let noisy = DetectorConfig::default();
    println!("\nwith counting noise (seed {}):", noisy.seed);
    for m in -2..=2i32 {
        let device = DeviceSpec::bare(m, -m);
        let record = acquire(&device, &state, &noisy);
        println!(
            "  ({:+}, {:+})  {:.1} +/- {:.1} counts",
            m,
            -m,
            record.mean(),
            record.std()
        );
    }
}
