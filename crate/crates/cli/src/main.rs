mod commands;
mod config;
mod output;

use cascade_core::constants::{Constants, BUNDLED_MATERIALS};
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "cascade", version, about = "Design and verification of cavity-enhanced SFG/SHG sources")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and report files; CSV goes to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for stochastic disturbances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Material constants file replacing the bundled one.
    #[arg(long, global = true)]
    constants: Option<PathBuf>,
    /// Add a generation timestamp to file headers.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Refractive index of a material.
    Index {
        #[arg(long, value_enum)]
        material: MaterialArg,
        #[arg(long, value_enum, default_value = "o")]
        ray: RayArg,
        /// Angle from the optic axis for extraordinary rays.
        #[arg(long, default_value_t = 90.0)]
        theta_deg: f64,
        #[arg(long)]
        wavelength_nm: f64,
        #[arg(long, default_value_t = 20.0)]
        temperature_c: f64,
    },
    /// Phase-matching report for the [bbo_shg] and/or [ppln_sfg] sections.
    Phasematch,
    /// Sum-frequency output versus the product of input powers.
    SfgCurve,
    /// Bow-tie cavity eigenmode, optimization and stability sweeps.
    Cavity {
        #[arg(value_enum)]
        action: CavityAction,
    },
    /// Second-harmonic output versus input power from the calibrated buildup model.
    ShgCurve,
    /// SFG and UV wavelengths with detuning from the Be+ D1 line.
    Tune {
        #[arg(long, requires = "signal_nm")]
        pump_nm: Option<f64>,
        #[arg(long, requires = "pump_nm")]
        signal_nm: Option<f64>,
        /// SFG (626 nm band) wavelengths; repeat for a table.
        #[arg(long = "sfg-nm", num_args = 1..)]
        sfg_nm: Vec<f64>,
    },
    /// Time-domain cavity lock simulation.
    Locksim,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum MaterialArg {
    Bbo,
    Linbo3,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RayArg {
    O,
    E,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum CavityAction {
    Design,
    Solve,
    Sweep,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(cascade_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<cascade_core::Error> for CliError {
    fn from(e: cascade_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use cascade_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidParam(_)
                | E::ConfigInvalid(_)
                | E::Constants(_)
                | E::WavelengthOutOfBand { .. }
                | E::TemperatureOutOfBand { .. } => 2,
                E::NoRoot { .. } | E::QuadratureFailure { .. } | E::NoConvergence { .. } | E::NonPhysical(_) => 3,
                E::Unstable { .. }
                | E::Infeasible(_)
                | E::Unreachable(_)
                | E::Unachievable(_)
                | E::Inconsistent(_)
                | E::NoPhaseMatch { .. }
                | E::TotalInternalReflection { .. } => 4,
            },
        }
    }
}

/// Everything a command produces: a human-readable report and named files.
pub struct Outcome {
    pub report: String,
    pub files: Vec<(String, String)>,
    /// Without --out, stream the CSV files to stdout and the report to stderr.
    pub csv_primary: bool,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let constants_text = match &cli.constants {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?
        }
        None => BUNDLED_MATERIALS.to_string(),
    };
    let constants = Constants::from_toml_str(&constants_text)?;
    let ctx = commands::Context { cli, constants, constants_text };
    let outcome = commands::dispatch(&ctx)?;
    match &cli.out {
        Some(dir) => {
            for (name, body) in &outcome.files {
                output::write_atomic(dir, name, body)?;
            }
            print!("{}", outcome.report);
        }
        None => {
            if outcome.csv_primary {
                eprint!("{}", outcome.report);
                for (name, body) in &outcome.files {
                    if name.ends_with(".csv") {
                        print!("{body}");
                    }
                }
            } else {
                print!("{}", outcome.report);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
