//! Command implementations behind the `basinscope` binary.

pub mod commands;
pub mod error;
pub mod spec_file;
pub mod svg;

use clap::{Parser, Subcommand};

use crate::commands::{CommonArgs, VerifyOptions};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "basinscope", version, about = "Lyapunov-series estimates of domains of attraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Taylor coefficients of V_p in graded-lex order.
    Coeffs(CommonArgs),
    /// Grid estimate of G_p, the certified level c_p and N_p^c.
    Region {
        #[command(flatten)]
        common: CommonArgs,
        /// Overlay the limit-cycle boundary traced by the oracle.
        #[arg(long)]
        oracle_boundary: bool,
    },
    /// Classify sampled cells of N_p^c by integrating the flow.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, hide = true, default_value_t = 1.0)]
        debug_inflate_cstar: f64,
    },
    /// Convergence interval of a 1D series and its continuation.
    Continue1d {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 4)]
        max_steps: usize,
    },
    /// Stage timings.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

/// Caps the global thread pool from `BASINSCOPE_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BASINSCOPE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::parse(format!("BASINSCOPE_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Coeffs(args) => commands::coeffs(&args),
        Command::Region {
            common,
            oracle_boundary,
        } => commands::region(&common, oracle_boundary),
        Command::Verify {
            common,
            samples,
            debug_inflate_cstar,
        } => {
            if !(debug_inflate_cstar > 0.0) {
                return Err(CliError::parse("inflation factor must be positive"));
            }
            commands::verify(
                &common,
                &VerifyOptions {
                    samples,
                    inflate: debug_inflate_cstar,
                },
            )
        }
        Command::Continue1d { common, max_steps } => commands::continue1d(&common, max_steps),
        Command::Bench { common, samples } => commands::bench(&common, samples),
    }
}
