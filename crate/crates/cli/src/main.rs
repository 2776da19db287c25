//! `supjcir`: fit supJCIR models to environmental series and evaluate
//! robust exponential disutility bounds.

mod commands;
mod error;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{FitArgs, QueryArgs, SurfaceArgs};
use error::CliResult;
use format::GridSpec;

#[derive(Parser)]
#[command(
    name = "supjcir",
    version,
    about = "supJCIR fitting and robust risk evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a `day,value` CSV and write the model file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Share of the mean drift carried by the diffusion part, in (0, 1].
        #[arg(long)]
        y: f64,
        /// Match mean and variance only.
        #[arg(long)]
        no_skew: bool,
        /// Largest ACF lag, in median sampling steps.
        #[arg(long, default_value_t = supjcir_core::estimation::DEFAULT_MAX_LAG)]
        max_lag: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stationary disutility bound with its worst-case diagnostics.
    Risk(RiskOpts),
    /// Normalized bound U over a (lambda_diff, lambda_jump) grid.
    RiskSurface {
        #[command(flatten)]
        common: QueryOpts,
        /// start:step:count
        #[arg(long)]
        ldiff_grid: String,
        /// start:step:count
        #[arg(long)]
        ljump_grid: String,
        #[arg(long)]
        out: PathBuf,
        /// Parallel evaluations; ORLICZ_WORKERS caps this.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the numerical cross-checks on a model file or the built-in models.
    Validate {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Replace every check tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Args)]
struct QueryOpts {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    p: f64,
    /// identity | pow:m | powinv:m | exp:m
    #[arg(long, default_value = "identity")]
    phi: String,
    #[arg(long)]
    q: f64,
    /// upper | lower
    #[arg(long)]
    bound: String,
}

#[derive(Args)]
struct RiskOpts {
    #[command(flatten)]
    common: QueryOpts,
    #[arg(long, default_value_t = 0.0)]
    ldiff: f64,
    #[arg(long, default_value_t = 0.0)]
    ljump: f64,
}

fn query_args(c: QueryOpts, lambda_diff: f64, lambda_jump: f64) -> QueryArgs {
    QueryArgs {
        model: c.model,
        p: c.p,
        phi: c.phi,
        q: c.q,
        bound: c.bound,
        lambda_diff,
        lambda_jump,
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Fit {
            input,
            y,
            no_skew,
            max_lag,
            out,
        } => {
            let report = commands::fit(&FitArgs {
                input,
                y,
                include_skew: !no_skew,
                max_lag,
                out,
            })?;
            print!("{report}");
        }
        Command::Risk(opts) => {
            print!(
                "{}",
                commands::risk(&query_args(opts.common, opts.ldiff, opts.ljump))?
            );
        }
        Command::RiskSurface {
            common,
            ldiff_grid,
            ljump_grid,
            out,
            workers,
        } => {
            let ldiff_grid: GridSpec = ldiff_grid.parse()?;
            let ljump_grid: GridSpec = ljump_grid.parse()?;
            let start = (ldiff_grid.start, ljump_grid.start);
            let rows = commands::risk_surface(&SurfaceArgs {
                query: query_args(common, start.0, start.1),
                ldiff_grid,
                ljump_grid,
                out,
                workers,
            })?;
            eprintln!("wrote {rows} grid cells");
        }
        Command::Validate { model, tol } => {
            print!("{}", commands::validate(model.as_deref(), tol)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
