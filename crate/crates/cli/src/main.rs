//! `capgeo`: command-line front end for capillary geodesic computations.

mod commands;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Run(#[from] capgeo::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Run(e) if e.is_numerical() => 3,
            CliError::Run(_) => 2,
        }
    }
}

macro_rules! run_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Run(e.into())
            }
        })*
    };
}

run_error!(
    capgeo::GeomError,
    capgeo::CurveError,
    capgeo::FlowError,
    capgeo::CapillaryError,
    capgeo::MinmaxError,
    capgeo::ConeError
);

#[derive(Debug, Parser)]
#[command(name = "capgeo", version, about = "Capillary geodesics on Riemannian 2-disks")]
pub struct Cli {
    /// Output directory for summaries, CSV tables and plots.
    #[arg(long, global = true, default_value = "capgeo-out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MetricArg {
    /// Metric definition file (`key = value` lines).
    #[arg(long)]
    pub metric: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gauss-Bonnet audit and boundary convexity scan.
    Audit {
        #[command(flatten)]
        metric: MetricArg,
    },
    /// Curve shortening flow of a curve CSV, or of a seeded random curve.
    Flow {
        #[command(flatten)]
        metric: MetricArg,
        /// Input polyline CSV with `x,y` or `u,t` columns.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Segments of the random curve.
        #[arg(long, default_value_t = 64)]
        vertices: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// A single geodesic shot from the boundary.
    Shoot {
        #[command(flatten)]
        metric: MetricArg,
        /// Boundary parameter of the basepoint.
        #[arg(long)]
        p: f64,
        /// Launch angle to the boundary tangent, in `(0, pi)`.
        #[arg(long)]
        alpha: f64,
    },
    /// Capillary geodesics at contact angle theta, with their Morse index.
    Find {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Critical lasso scan and the no-short-lasso hypothesis check.
    Lassos {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        theta: f64,
        /// Basepoints of the scan.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Launch angles per basepoint.
        #[arg(long, default_value_t = 96)]
        angles: usize,
        /// Length bound; defaults to twice the two-parameter width estimate.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Upper and lower width estimates from the tightened line sweepout.
    Width {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Capped-cone disk: lasso at half turning and shots just past it.
    Sharpness {
        /// Boundary total turning in `(0, pi)`.
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: configuration: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: configuration: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
