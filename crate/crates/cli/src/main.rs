use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ws_optics::{Error, ErrorCategory};

mod commands;

/// Wavefront, refractive-power and MTF tools for windscreen/camera optics.
#[derive(Debug, Parser)]
#[command(name = "ws-optics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit Zernike coefficients to a wavefront map CSV.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
        #[arg(long, default_value_t = 9)]
        max_index: usize,
    },
    /// Recover coefficients from Shack-Hartmann spot displacements.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
        #[arg(long, default_value_t = 9)]
        max_index: usize,
    },
    /// Refractive power maps (D_x, D_y, D_xy) of a wavefront map CSV.
    Refpower {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// MTF of a coefficient set behind a circular pupil.
    Mtf {
        /// Coefficients JSON.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        lens: LensArgs,
        #[command(flatten)]
        sampling: Sampling,
        /// Spectrum CSV (`lambda_m,weight`); overrides --lambda-nm.
        #[arg(long)]
        psd: Option<PathBuf>,
        /// Direction of the spatial frequency vector, degrees from x.
        #[arg(long, default_value_t = 0.0)]
        orientation_deg: f64,
    },
    /// Slanted-edge SFR of a PGM (or CSV raster) image.
    Sfr {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
        /// Region of interest as row0,col0,rows,cols.
        #[arg(long, value_delimiter = ',')]
        roi: Option<Vec<usize>>,
        /// Frequency of the summary value, cycles/pixel.
        #[arg(long, default_value_t = ws_optics::sfr::DEFAULT_REFERENCE_FREQUENCY)]
        reference_cyc_per_px: f64,
    },
    /// Render a synthetic slanted edge to PGM (or CSV raster by extension).
    RenderEdge {
        #[command(flatten)]
        out: Output,
        /// Gaussian blur in pixels; ignored when --coefficients is given.
        #[arg(long, default_value_t = 0.0)]
        sigma_px: f64,
        /// Blur with the PSF of these coefficients behind the lens pupil.
        #[arg(long)]
        coefficients: Option<PathBuf>,
        #[command(flatten)]
        lens: LensArgs,
        #[arg(long, default_value_t = 5.0)]
        angle_deg: f64,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 3.0)]
        pixel_pitch_um: f64,
        /// Additive Gaussian noise, fraction of full scale. Needs --seed.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// System MTF of a lens behind a windscreen from a system model JSON.
    SystemMtf {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
        #[arg(long, default_value_t = 0.0)]
        field_deg: f64,
        #[arg(long, value_enum, default_value_t = Direction::Horizontal)]
        orientation: Direction,
        #[arg(long, default_value_t = 550.0)]
        lambda_nm: f64,
        #[command(flatten)]
        sampling: Sampling,
        /// Drop the windscreen from the model.
        #[arg(long)]
        lens_only: bool,
        /// Also write the separability report CSV here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Trace and blur-ellipse proxy per Zernike mode: the refractive-power
    /// blind spot.
    DemoBlindspot {
        #[command(flatten)]
        out: Output,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude_um: f64,
        #[arg(long, default_value_t = 50.0)]
        aperture_radius_mm: f64,
    },
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LensArgs {
    #[arg(long, default_value_t = 6e-3)]
    f_m: f64,
    #[arg(long, default_value_t = 2.0)]
    f_number: f64,
    #[arg(long, default_value_t = 550.0)]
    lambda_nm: f64,
}

#[derive(Debug, Args)]
struct Sampling {
    /// Number of frequency samples from 0 to the maximum.
    #[arg(long, default_value_t = 101)]
    samples: usize,
    /// Maximum frequency; the diffraction cutoff when absent.
    #[arg(long)]
    k_max_cyc_per_mm: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Direction {
    Horizontal,
    Vertical,
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Input => 2,
        ErrorCategory::Numerical => 3,
        ErrorCategory::MeasurementValidity => 4,
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = std::io::stdout().write_all(e.to_string().as_bytes());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            return report("usage", first, 2);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.to_string(), exit_code(&e)),
    }
}
