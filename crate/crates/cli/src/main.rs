//! `voxcta`: as-manufactured families, comparative topological analysis,
//! threshold correction and slice-wise analysis of voxel solids.
//!
//! Exit codes: 0 success, 2 input/output, parse or frame errors, 3 transform
//! precision failure, 4 internal consistency failure, 5 correction stopped
//! without removing every non-simple feature.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use voxcta::voxel::{Axis, Format, MmnSpec};
use voxcta::{Error, Lambda};

#[derive(Parser)]
#[command(name = "voxcta", version, about = "Comparative topological analysis of as-manufactured voxel solids")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "VOXCTA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridFormat {
    Binvox,
    Raw,
}

#[derive(Subcommand)]
enum Command {
    /// Manufacture a design at several thresholds.
    Family {
        #[arg(long)]
        design: PathBuf,
        /// Structuring element, e.g. `sphere:2`, `cube:1`, `cube:1,0,1`.
        #[arg(long)]
        mmn: MmnSpec,
        /// Comma-separated ascending thresholds, decimals or fractions.
        #[arg(long)]
        lambdas: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write each member as a VTK volume.
        #[arg(long)]
        vtk: bool,
        #[arg(long, value_enum, default_value = "binvox")]
        format: GridFormat,
    },
    /// Compare a design with a manufactured shape.
    Cta {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        manufactured: PathBuf,
        /// Report path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Directory for the ECC field and feature label volumes.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Adjust the threshold field until no non-simple feature remains.
    Correct {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        mmn: MmnSpec,
        /// Initial uniform threshold; overrides the configuration file.
        #[arg(long)]
        lambda: Option<Lambda>,
        /// JSON configuration: lambda0, step, max_iters, radius, budget.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Planar analysis of every layer along an axis.
    Slice {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        axis: Axis,
        /// Planar structuring element, e.g. `disk:2` or `square:1`.
        #[arg(long)]
        mmn: MmnSpec,
        #[arg(long)]
        lambda: Lambda,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Precision { .. } => 3,
        Error::Internal(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Family { design, mmn, lambdas, out, vtk, format } => {
            let lambdas = commands::parse_lambdas(&lambdas)?;
            let format = match format {
                GridFormat::Binvox => Format::Binvox,
                GridFormat::Raw => Format::Raw,
            };
            commands::family(&design, &mmn, &lambdas, &out, vtk, format)?;
            Ok(true)
        }
        Command::Cta { design, manufactured, out, vtk } => {
            commands::cta(&design, &manufactured, &out, vtk.as_deref())?;
            Ok(true)
        }
        Command::Correct { design, mmn, lambda, config, out } => {
            commands::correct(&design, &mmn, lambda, config.as_deref(), &out)
        }
        Command::Slice { design, axis, mmn, lambda, out } => {
            commands::slice(&design, axis, &mmn, lambda, &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("voxcta: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("voxcta: correction stopped with non-simple features remaining");
            ExitCode::from(5)
        }
        Err(e) => {
            eprintln!("voxcta: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
