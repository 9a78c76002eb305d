//! Single-mode basics: field profiles, vortex rings, and the propagation
//! phase ladder that everything downstream leans on.

use biphoton::modes::{eval_lg, BeamGeometry, GridSpec, ModeIndex};

fn main() {
    let waist = BeamGeometry {
        w0_mm: 2.0,
        lambda_nm: 812.0,
        z_mm: 0.0,
    };

    println!("transverse amplitude along +x (w0 = {} mm):", waist.w0_mm);
    println!("{:>8} {:>12} {:>12} {:>12}", "x/w0", "|m|=0", "|m|=1", "|m|=2");
    for i in 0..=6 {
        let x = 0.5 * i as f64;
        let row: Vec<f64> = (0..=2)
            .map(|m| eval_lg(ModeIndex::new(m), &waist, x * waist.w0_mm, 0.0).norm())
            .collect();
        println!("{:8.2} {:12.6} {:12.6} {:12.6}", x, row[0], row[1], row[2]);
    }

    // The |m| = 1 ring peaks where d/dr of r exp(-r^2/w0^2) vanishes.
    let peak = (0..4000)
        .map(|i| i as f64 * 1e-3)
        .max_by(|a, b| {
            let f = |r: &f64| eval_lg(ModeIndex::new(1), &waist, *r, 0.0).norm();
            f(a).total_cmp(&f(b))
        })
        .unwrap();
    println!(
        "\n|m|=1 ring radius: {:.4} mm (w0 / sqrt(2) = {:.4} mm)",
        peak,
        waist.w0_mm / std::f64::consts::SQRT_2
    );

    // Propagation phase: -(|m| + 1) arctan(z / z_R), a ladder in |m|.
    let z_r = waist.rayleigh_range_mm();
    println!("\nrayleigh range: {:.1} mm", z_r);
    println!("{:>10} {:>10} {:>10} {:>10}", "z/z_R", "m=0", "m=1", "m=2");
    for mult in [0.25, 1.0, 4.0] {
        let geom = BeamGeometry {
            z_mm: mult * z_r,
            ..waist
        };
        println!(
            "{:10.2} {:10.4} {:10.4} {:10.4}",
            mult,
            geom.gouy_phase(0),
            geom.gouy_phase(1),
            geom.gouy_phase(2)
        );
    }

    // Sampled grids expose the same fields for overlap integrals.
    let grid = GridSpec::new(64, 8.0).unwrap();
    let field = biphoton::modes::sample_field(
        &[(ModeIndex::new(1), biphoton::Complex64::new(1.0, 0.0))],
        &waist,
        grid,
        true,
    )
    .unwrap();
    let norm = field.overlap(&field).unwrap().norm();
    println!("\n64x64 sampled |m|=1 self-overlap: {:.6}", norm);
}
