use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use defensor::runner::{cmd_ingest, cmd_run, cmd_verify, ForecasterOverrides};

/// Defensive forecasting for prediction with expert advice.
///
/// Exit codes: 0 ok, 1 usage/config error, 2 runtime monitor violation,
/// 3 verification failure.
#[derive(Parser)]
#[command(name = "defensor", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured protocol and write trace + summary files
    Run {
        /// Run configuration (JSON)
        config: PathBuf,
        /// Output directory (default: defensor-out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fan out R independently seeded replicas across threads
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        /// Override the forecaster's bisection width tolerance
        #[arg(long)]
        bisect_tol: Option<f64>,
        /// Override the forecaster's increment acceptance tolerance
        #[arg(long)]
        t_tol: Option<f64>,
        /// Override the forecaster's iteration cap
        #[arg(long)]
        max_iter: Option<u32>,
    },
    /// Check the one-step supermartingale inequality on a grid
    Verify {
        /// quadratic, log, or a path to a game JSON document
        #[arg(long)]
        game: String,
        /// The exponent κ to certify
        #[arg(long)]
        kappa: f64,
        /// Grid resolution per axis
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Convert a 0/1-per-line CSV into a fixed-sequence reality spec
    Ingest {
        /// Outcome file, one 0/1 value per line (header optional)
        input: PathBuf,
        /// Where to write the reality spec JSON
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEFENSOR_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            replicas,
            bisect_tol,
            t_tol,
            max_iter,
        } => cmd_run(
            &config,
            out.as_deref(),
            replicas,
            &ForecasterOverrides {
                bisect_tol,
                t_tol,
                max_iter,
            },
        ),
        Command::Verify { game, kappa, grid } => cmd_verify(&game, kappa, grid),
        Command::Ingest { input, out } => cmd_ingest(&input, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
