//! `urnsim`: command-line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage or
//! configuration error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "urnsim", version, about = "Interacting Polya urn opinion dynamics on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct GraphArg {
    /// Graph: star:N | complete:N | kreg:N:K | path:N | file:PATH
    #[arg(long)]
    graph: Option<String>,

    /// Edge-list file: header `n m`, then `m` lines `u v` (0-based)
    #[arg(long, value_name = "PATH")]
    graph_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as CSV (t,agent,black,total,z)
    Simulate {
        #[command(flatten)]
        graph: GraphArg,
        /// Probability that an agent's initial signal is correct (white)
        #[arg(long, conflicts_with = "init", required_unless_present = "init")]
        alpha: Option<f64>,
        /// Fixed initial colors, e.g. W,B,W
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        seed: u64,
        /// Write every STRIDE-th step (the final step is always written)
        #[arg(long, default_value_t = 1)]
        stride: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a replica sweep from a JSON config; one samples CSV per alpha
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Exact outcome distribution after DEPTH steps, as JSON
    Enumerate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        init: String,
        #[arg(long)]
        depth: usize,
        /// List every draw path instead of merged compositions
        #[arg(long)]
        paths: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the mean-field ODE and write CSV (t,z_0,...)
    Ode {
        #[command(flatten)]
        graph: GraphArg,
        /// Initial proportions, e.g. 1,0,0
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        z0: Vec<f64>,
        #[arg(long)]
        horizon: f64,
        /// RK4 step (default: 0.01 / max degree)
        #[arg(long)]
        step_size: Option<f64>,
        /// Write every STRIDE-th step
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit beta and normal laws to a samples CSV and print JSON
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conjecture table (alpha,a_hat,b_hat,a_plus_b,empirical_mean) from samples CSVs
    Report {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
