//! Rendering the grating patterns a spatial light modulator would display:
//! blazed carrier fringes, fork dislocations at vortex charges, and the
//! four-step sequence of a stepped analysis device.

use std::fs;

use biphoton::holograms::{export_pgm, render_hologram, HologramGrid, FRINGE_PERIOD};
use biphoton::measurement::ArmPattern;
use biphoton::modes::BeamGeometry;
use biphoton::psdh::PHASE_STEPS;

fn main() {
    let geometry = BeamGeometry {
        w0_mm: 2.0,
        lambda_nm: 812.0,
        z_mm: 0.0,
    };
    let grid = HologramGrid {
        width: 320,
        height: 240,
        pitch_mm: 0.032,
    };

    // A bare vortex projector: the carrier fringes fork at the center, one
    // extra tine per unit charge.
    let out_dir = std::env::temp_dir().join("biphoton_holograms");
    fs::create_dir_all(&out_dir).unwrap();
    for charge in [1, 2, -2] {
        let holo =
            render_hologram(&ArmPattern::single(charge), &geometry, &grid, FRINGE_PERIOD)
                .unwrap();
        let path = out_dir.join(format!("vortex_{charge:+}.pgm"));
        fs::write(&path, export_pgm(&holo, 256).unwrap()).unwrap();
        println!("charge {charge:+}: wrote {}", path.display());
    }

    // A superposition pattern, with its reference term stepped through the
    // four retrieval phases.
    let center = grid.width / 2;
    println!("\nstepped superposition 0.6|+1> + 0.4|0>, center column values:");
    for (index, phi) in PHASE_STEPS.iter().enumerate() {
        let pattern = ArmPattern::with_reference(1, 0.6, 0, 0.4, *phi).unwrap();
        let holo = render_hologram(&pattern, &geometry, &grid, FRINGE_PERIOD).unwrap();
        let path = out_dir.join(format!("stepped_{index}.pgm"));
        fs::write(&path, export_pgm(&holo, 256).unwrap()).unwrap();
        println!(
            "  step {index} (phi = {phi:.4}): value at center {:.4}, wrote {}",
            holo.value(center, grid.height / 2),
            path.display()
        );
    }

    // Gray-level quantization: exporting at 4 levels bins the wrapped phase
    // coarsely. The top level stands for a full turn and stays empty.
    let coarse = export_pgm(
        &render_hologram(&ArmPattern::single(1), &geometry, &grid, FRINGE_PERIOD).unwrap(),
        4,
    )
    .unwrap();
    let header_len = b"P5\n320 240\n3\n".len();
    let mut counts = [0usize; 4];
    for byte in &coarse[header_len..] {
        counts[*byte as usize] += 1;
    }
    println!("\n4-level export histogram: {counts:?}");
}
