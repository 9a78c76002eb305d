//! Command line front end over the scenario pipelines.
//!
//! Every subcommand loads a scenario (a built-in reference source when no
//! file is given), applies flag overrides, runs one pipeline, and writes its
//! products into the output directory. Exit status separates unusable
//! inputs from unusable disks: 2 means the scenario was invalid or the
//! requested measurement is infeasible, 3 means an I/O failure.

use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biphoton::scenario::{
    run_dove_sweep, run_gouy_fit, run_hologram, run_pump_sweep, run_spectrum,
    run_tomography, RunError, Scenario,
};

#[derive(Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Digital twin of phase-resolved biphoton mode tomography"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML); omit to use the built-in reference source.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Override the detector RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the state bandwidth.
    #[arg(long, global = true)]
    bandwidth: Option<u32>,

    /// Override the source brightness in coincidences per second.
    #[arg(long, global = true)]
    brightness: Option<f64>,

    /// Override the number of repeated acquisition windows.
    #[arg(long, global = true)]
    repeats: Option<usize>,

    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,

    /// Also write grayscale plots where a command supports them.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the bare coincidence spectrum of the prepared state.
    Spectrum,
    /// Run full phase tomography: plan, acquire, reconstruct.
    Tomography,
    /// Tomography plus the propagation-phase ladder fit.
    GouyFit,
    /// Sweep a rotated prism pair and track the antidiagonal phase shifts.
    DoveSweep,
    /// Sweep a pump component's phase and track where it reappears.
    PumpSweep,
    /// Render the analysis holograms for the configured target mode.
    Hologram,
}

enum AppError {
    Infeasible(RunError),
    Io(io::Error),
}

impl From<RunError> for AppError {
    fn from(e: RunError) -> Self {
        AppError::Infeasible(e)
    }
}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Io(e)
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario, AppError> {
    let mut scenario = match &cli.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            Scenario::from_toml(&text).map_err(RunError::from)?
        }
        None => Scenario::reference(),
    };
    if let Some(seed) = cli.seed {
        scenario.detector.seed = seed;
    }
    if let Some(bandwidth) = cli.bandwidth {
        scenario.bandwidth = bandwidth;
    }
    if let Some(brightness) = cli.brightness {
        scenario.detector.brightness = brightness;
    }
    if let Some(repeats) = cli.repeats {
        scenario.detector.repeats = repeats;
    }
    Ok(scenario)
}

fn report_files(written: &[PathBuf]) {
    for path in written {
        println!("wrote {}", path.display());
    }
}

fn run(cli: &Cli) -> Result<(), AppError> {
    let scenario = load_scenario(cli)?;
    let dir = &cli.output_dir;
    println!(
        "scenario {:?}: bandwidth {}, seed {}",
        scenario.name, scenario.bandwidth, scenario.detector.seed
    );
    match cli.command {
        Command::Spectrum => {
            let run = run_spectrum(&scenario)?;
            println!("mode intensities (grid total normalized to 1):");
            for (pair, entry) in run.scan.entries() {
                if entry.intensity > 0.0 {
                    println!(
                        "  {}  {:.6} +/- {:.6}",
                        pair, entry.intensity, entry.err
                    );
                }
            }
            report_files(&run.write(dir, cli.plot)?);
        }
        Command::Tomography => {
            let run = run_tomography(&scenario)?;
            print!("{}", run.plan);
            println!("reconstructed spectrum:");
            for row in run.spectrum.rows() {
                println!(
                    "  {}  intensity {:.6} +/- {:.6}  phase {:.4} +/- {:.4}",
                    row.pair, row.intensity, row.intensity_err, row.phase, row.phase_err
                );
            }
            report_files(&run.write(dir)?);
        }
        Command::GouyFit => {
            let run = run_gouy_fit(&scenario)?;
            for (order, estimate) in &run.summary {
                println!(
                    "order {}: phase {:.4} +/- {:.4}",
                    order, estimate.phase, estimate.err
                );
            }
            println!(
                "fit: slope {:.5} rad/order, intercept {:.5}, rms residual {:.5}",
                run.fit.slope, run.fit.intercept, run.fit.residual
            );
            report_files(&run.write(dir)?);
        }
        Command::DoveSweep => {
            let run = run_dove_sweep(&scenario)?;
            for row in &run.rows {
                println!(
                    "eta {:6.2} deg: shift(+1,-1) {:+.4} (expect {:+.4}), \
                     shift(-1,+1) {:+.4} (expect {:+.4})",
                    row.eta_deg,
                    row.shift_plus_rad,
                    row.expected_plus_rad,
                    row.shift_minus_rad,
                    row.expected_minus_rad
                );
            }
            report_files(&run.write(dir)?);
        }
        Command::PumpSweep => {
            let run = run_pump_sweep(&scenario)?;
            for row in &run.rows {
                println!(
                    "shift {:+.4}: mode ({:+}, {:+}) moved {:+.4} (expect {:+.4})",
                    row.shift_rad, row.m, row.n, row.measured_shift_rad, row.expected_shift_rad
                );
            }
            report_files(&run.write(dir)?);
        }
        Command::Hologram => {
            let run = run_hologram(&scenario)?;
            println!(
                "rendered {} holograms at {}x{} px, {} gray levels",
                run.images.len(),
                scenario.hologram.grid.width,
                scenario.hologram.grid.height,
                run.levels
            );
            report_files(&run.write(dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Infeasible(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(AppError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(3)
        }
    }
}
