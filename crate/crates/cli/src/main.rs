use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod plot;

#[derive(Parser, Debug)]
#[command(
    name = "cranopt",
    version,
    about = "Time/energy trade-off trajectories for a gantry crane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for one weight and write solution, trajectory and validation report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Time weight in [0, 1]; defaults to `alpha` from the config.
        #[arg(long)]
        alpha: Option<f64>,
        /// Output directory; defaults to `output` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
    /// Solve a log-spaced range of weights and write the Pareto table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        alpha_min: f64,
        #[arg(long, default_value_t = 0.99)]
        alpha_max: f64,
        #[arg(long, default_value_t = 25)]
        count: usize,
        /// Start each weight from the previous one's solution.
        #[arg(long)]
        warm_start: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a solution in the time domain and check it.
    Validate {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Integration step; defaults to t_f / 5000.
        #[arg(long)]
        dt: Option<f64>,
        /// Where to write the report; standard output if absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Turn a solve or sweep directory into plottable series.
    Plotdata {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            config,
            alpha,
            out,
            verbose,
        } => commands::solve(&config, alpha, out.as_deref(), verbose),
        Command::Sweep {
            config,
            alpha_min,
            alpha_max,
            count,
            warm_start,
            out,
        } => commands::sweep(&config, alpha_min, alpha_max, count, warm_start, out.as_deref()),
        Command::Validate {
            solution,
            config,
            dt,
            report,
        } => commands::validate(&solution, &config, dt, report.as_deref()),
        Command::Plotdata { input, out } => plot::plotdata(&input, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}

pub(crate) fn display(p: &Path) -> String {
    p.display().to_string()
}
