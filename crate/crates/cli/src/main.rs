//! `tnlab`: classify transnormal systems, build and verify their functions,
//! and run the double disk bundle surgery.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status: success.
pub const EXIT_OK: u8 = 0;
/// Any error (bad input, numerical failure).
pub const EXIT_ERROR: u8 = 1;
/// Classification finished, but an end was never identified before `t_max`.
pub const EXIT_HORIZON: u8 = 2;
/// The cos r demonstration behaved as expected: transnormal, not isoparametric.
pub const EXIT_DEMO: u8 = 3;
/// A verification ran to completion and failed its tolerance.
pub const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "tnlab", version, about = "Transnormal systems and isoparametric foliations on surfaces and bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Output {
    /// Directory for reports.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Omit the timestamp field so reruns are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Clone)]
pub struct Source {
    /// Built-in configuration name.
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// JSON configuration file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct March {
    /// Grid step along the normal geodesics.
    #[arg(long, value_parser = positive)]
    pub dt: Option<f64>,
    /// Arclength horizon.
    #[arg(long, value_parser = positive)]
    pub tmax: Option<f64>,
}

#[derive(Args, Clone)]
pub struct Sampling {
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    pub tol: f64,
    /// Offset into the low-discrepancy sequence.
    #[arg(long, default_value_t = 0)]
    pub seed_grid: u64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Check {
    Transnormality,
    Isoparametric,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the transnormal system through a seed foil.
    Classify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        march: March,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulate the case-matched transnormal function along a normal geodesic.
    BuildFn {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        march: March,
        #[command(flatten)]
        output: Output,
    },
    /// Vector bundle total spaces.
    Bundle {
        #[command(subcommand)]
        action: BundleAction,
    },
    /// Double disk bundle surgery.
    Surgery {
        #[command(subcommand)]
        action: SurgeryAction,
    },
    /// Sample-based transnormality and isoparametricity reports for a preset's function.
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        march: March,
        #[arg(long, value_enum, default_value = "both")]
        check: Check,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
    /// f = cos r on the plane: transnormal but never isoparametric. Exits with 3.
    DemoRemark34 {
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum BundleAction {
    /// Check the identities of f = |u|^2 and the sphere bundle mean curvatures.
    Verify {
        /// JSON bundle description; overrides the flags below.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Constant connection omega J (rank 2 only).
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        /// Rank-1 bundle glued by -1.
        #[arg(long)]
        mobius: bool,
        #[arg(long, default_value_t = std::f64::consts::TAU, value_parser = positive)]
        length: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed_grid: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum SurgeryAction {
    /// Assemble, normalize, rescale and verify.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("TRANSNORMAL_LAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("TRANSNORMAL_LAB_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("TRANSNORMAL_LAB_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    init_threads()?;
    match cli.command {
        Command::Classify { source, march, output } => commands::classify(&source, &march, &output),
        Command::BuildFn { source, march, output } => commands::build_fn(&source, &march, &output),
        Command::Bundle { action: BundleAction::Verify { spec, rank, omega, mobius, length, samples, tol, seed_grid, output } } => {
            commands::bundle_verify(spec.as_deref(), rank, omega, mobius, length, samples, tol, seed_grid, &output)
        }
        Command::Surgery { action: SurgeryAction::Run { source, tol, output } } => commands::surgery(&source, tol, &output),
        Command::Verify { source, march, check, sampling, output } => {
            commands::verify(&source, &march, check, &sampling, &output)
        }
        Command::DemoRemark34 { sampling, output } => commands::cosine_demo(&sampling, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the generic error code; 2 is reserved for horizon-limited runs
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
