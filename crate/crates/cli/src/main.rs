mod commands;
mod csv;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riccati_disc::Error;

/// Bracket the discriminant of periodic Riccati equations and check the
/// verdict by direct integration.
#[derive(Parser, Debug)]
#[command(name = "riccati-disc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Problem file (JSON).
    pub input: PathBuf,
    /// Override or add a parameter, `name=value`. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Instantiate a family problem at this η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Quadrature and reduction grid size.
    #[arg(long, default_value_t = 2048)]
    pub grid: usize,
    /// Newton stopping tolerance for harmonic balance.
    #[arg(long, default_value_t = 1e-12)]
    pub newton_tol: f64,
    /// Bisection width for periodic-solution initial conditions.
    #[arg(long, default_value_t = 1e-10)]
    pub cycle_tol: f64,
    /// Accepted for harness reproducibility; every pipeline is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Δ bracket per harmonic-balance order and the resulting verdict.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// CSV with order, mu_lo, mu_hi, delta_lo, delta_hi.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Displacement profile and periodic solutions by direct integration.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        x_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        /// Added to γ (canonical problems only).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu_offset: f64,
        /// Directory for profile.csv and cycles.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Anchor scan of an affine family and the bracket on its bifurcation η.
    Family {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Number of equidistant anchors.
        #[arg(long, default_value_t = 5)]
        points: usize,
        /// Directory for anchors.csv and envelope.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Transform a general equation to canonical form.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Use the singular reduction around this constant.
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<f64>,
        /// Canonical problem file to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Harmonic-balance coefficient tables.
    Hb {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// CSV with one row per order and harmonic.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failures, each with its exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numeric(String),
    Reduction(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Reduction(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numeric(m) | Failure::Reduction(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse(_)
            | Error::Eval(_)
            | Error::BadPeriod(_)
            | Error::NotPeriodic { .. }
            | Error::BadRange { .. }
            | Error::DegenerateDirection
            | Error::Invalid(_) => Failure::Input(msg),
            Error::A2Vanishes { .. } | Error::FVanishes { .. } | Error::CurveCrossing { .. } => {
                Failure::Reduction(msg)
            }
            _ => Failure::Numeric(msg),
        }
    }
}

impl From<problem::InputError> for Failure {
    fn from(e: problem::InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("I/O error: {e}"))
    }
}

/// Successful runs end with a determinate or an undetermined verdict.
pub enum Verdict {
    Determinate,
    Undetermined,
}

fn configure_threads() {
    if let Ok(v) = std::env::var("RICCATI_DISC_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring RICCATI_DISC_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Estimate { common, order, out } => {
            commands::estimate(&common, order, out.as_deref())
        }
        Command::Oracle {
            common,
            x_min,
            x_max,
            samples,
            mu_offset,
            out_dir,
        } => commands::oracle(
            &common,
            commands::OracleArgs {
                x_min,
                x_max,
                samples,
                mu_offset,
                out_dir,
            },
        ),
        Command::Family {
            common,
            order,
            points,
            out_dir,
        } => commands::family(&common, order, points, out_dir.as_deref()),
        Command::Reduce { common, u0, out } => commands::reduce(&common, u0, out.as_deref()),
        Command::Hb { common, order, out } => commands::hb(&common, order, out.as_deref()),
    };
    match result {
        Ok(Verdict::Determinate) => ExitCode::SUCCESS,
        Ok(Verdict::Undetermined) => ExitCode::from(3),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
