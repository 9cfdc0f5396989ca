//! `lrsphp`: figure data and end-to-end scenarios for entangled long-range
//! surface phonon polaritons.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{GridSpec, PartialConfig, RunConfig};
use error::CliError;
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "lrsphp", version, about = "Long-range surface phonon polariton entanglement toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Lorentz permittivity over a wavenumber grid (cm^-1).
    Permittivity,
    /// Interface and film dispersion over a wavenumber grid (cm^-1).
    Dispersion,
    /// Flux-normalized long-range mode profile over x (um) at --omega-cm1.
    ModeProfile,
    /// Normalized overlap window |C| over a (dbeta1, dbeta2) grid (rad/um).
    Overlap,
    /// B map and grating efficiency spectrum over a wavelength grid (um).
    PhaseMatch,
    /// Phase matching, couplers, transfer matrix, outcomes and g2 trace.
    Pipeline,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in material name or path to a material JSON file.
    #[arg(long, global = true)]
    material: Option<String>,
    #[arg(long, global = true)]
    thickness_um: Option<f64>,
    /// Cladding permittivity (real).
    #[arg(long, global = true)]
    eps_d: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta_rad: Option<f64>,
    #[arg(long, global = true)]
    grating_period_um: Option<f64>,
    #[arg(long, global = true)]
    grating_order: Option<i32>,
    /// Total coupling strength g*L of each grating.
    #[arg(long, global = true)]
    coupling_gl: Option<f64>,
    #[arg(long, global = true)]
    coupler_length_um: Option<f64>,
    /// Phase-matching level B (um^-1); sets the default period order/B.
    #[arg(long, global = true)]
    b_level: Option<f64>,
    #[arg(long, global = true)]
    pump_cm1: Option<f64>,
    #[arg(long, global = true)]
    pump_bandwidth_cm1: Option<f64>,
    /// Frequency for mode-profile (cm^-1).
    #[arg(long, global = true)]
    omega_cm1: Option<f64>,
    /// Primary sweep grid as min:max:count.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    /// Angle grid for the B map as min:max:count (rad).
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta_grid: Option<GridSpec>,
    /// Entanglement scheme for the g2 trace: frequency or energy-time.
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

impl Flags {
    fn layer(self) -> PartialConfig {
        PartialConfig {
            material: self.material,
            thickness_um: self.thickness_um,
            eps_d: self.eps_d,
            theta_rad: self.theta_rad,
            grating_period_um: self.grating_period_um,
            grating_order: self.grating_order,
            coupling_gl: self.coupling_gl,
            coupler_length_um: self.coupler_length_um,
            b_level: self.b_level,
            pump_cm1: self.pump_cm1,
            pump_bandwidth_cm1: self.pump_bandwidth_cm1,
            omega_cm1: self.omega_cm1,
            grid: self.grid,
            theta_grid: self.theta_grid,
            scheme: self.scheme,
            out: self.out,
            format: self.format,
        }
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let file = match &cli.flags.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let cfg = RunConfig::resolve(file.overlay(cli.flags.layer()))?;
    match cli.command {
        Command::Permittivity => commands::permittivity_cmd(&cfg),
        Command::Dispersion => commands::dispersion_cmd(&cfg),
        Command::ModeProfile => commands::mode_profile_cmd(&cfg),
        Command::Overlap => commands::overlap_cmd(&cfg),
        Command::PhaseMatch => commands::phase_match_cmd(&cfg),
        Command::Pipeline => commands::pipeline_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
