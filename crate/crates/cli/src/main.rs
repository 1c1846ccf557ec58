use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use maxlat_core::Error;

mod commands;
mod xi;

#[derive(Parser, Debug)]
#[command(
    name = "maxlat",
    version,
    about = "Lattice-point counts, ball multipliers and bound sweeps on Z^d"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Fast,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum ProbeArg {
    Norm,
    Square,
    Ellipsoid,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// |B_N ∩ Z^d|, or the joint profile by squared norm and marked coordinates.
    Count {
        #[arg(long)]
        d: u32,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Marked class, e.g. "in{-1,1}", "abs>=2", "all", "none", joined by `|`.
        #[arg(long)]
        profile: Option<String>,
        /// Profile only the first R coordinates.
        #[arg(long)]
        split: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// m_N(ξ) with 17 significant digits.
    Multiplier {
        #[arg(long)]
        d: u32,
        #[arg(long = "N")]
        n: u32,
        /// Inline list ("0.1,0.2"), rationals ("1/2,1/2"), a single value
        /// broadcast to every coordinate, or a file holding such a list.
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        /// Also print the small-scale approximant and its branch.
        #[arg(long)]
        lambda: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a verification suite; exit 0 iff no violations and no errors.
    Verify {
        #[arg(long)]
        suite: String,
        /// Grid file, or inline TOML such as "n_max=30", laid over the shipped grid.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "maxlat-out")]
        out: PathBuf,
    },
    /// Operator probes on (Z/MZ)^d.
    Maxop {
        #[arg(long, value_enum)]
        probe: ProbeArg,
        #[arg(long)]
        d: u32,
        /// Period per axis; defaults to 32 for d <= 3 and 16 above.
        #[arg(long = "M")]
        m: Option<u64>,
        /// Radii ("1,2,4" or "1..8" for powers of two); ellipsoid radii t may be reals.
        #[arg(long, default_value = "1..8")]
        set: String,
        #[arg(long, default_value_t = 32)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Square-function window {2^n : c1 √d <= 2^n <= c2 d}.
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        /// Report path; defaults to maxlat-out/maxop-<probe>-d<d>.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Violations,
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_budget() => 3,
        Error::BudgetOverflow { .. } => 3,
        Error::Config(_) | Error::Io(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match commands::init_threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("maxlat: {e}");
            return ExitCode::from(4);
        }
    };
    let result = match cli.command {
        Command::Count {
            d,
            n,
            mode,
            profile,
            split,
            json,
        } => commands::count(d, n, mode, profile.as_deref(), split, json, threads),
        Command::Multiplier { d, n, xi, lambda, json } => commands::multiplier(d, n, &xi, lambda, json, threads),
        Command::Verify { suite, grid, out } => commands::verify(&suite, grid.as_deref(), &out, threads),
        Command::Maxop {
            probe,
            d,
            m,
            set,
            trials,
            seed,
            c1,
            c2,
            out,
        } => commands::maxop(
            commands::ProbeArgs {
                probe,
                d,
                m,
                set,
                trials,
                seed,
                c1,
                c2,
            },
            out,
            threads,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations) => ExitCode::from(1),
        Err(Failure::Core(e)) => {
            eprintln!("maxlat: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
