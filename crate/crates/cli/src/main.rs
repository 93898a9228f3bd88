mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "srf", version, about = "Sketched random features for graph neural networks")]
pub struct Cli {
    /// Silence progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Common {
    /// JSON config file layered over the defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dotted override applied last, e.g. `--set gnn.epochs=50`; values parse as JSON when possible.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Top-level seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as JSON.
    Gen {
        kind: GenKind,
        /// Output file [default: <kind>.json in $SRF_OUT_DIR or the current directory].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tree depth (tree-nm).
        #[arg(long)]
        r: Option<usize>,
        /// Node count (gnp).
        #[arg(long)]
        n: Option<usize>,
        /// Edge probability (gnp).
        #[arg(long)]
        p: Option<f64>,
        /// Feature width (gnp).
        #[arg(long)]
        features: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Precompute sketched embeddings for every graph of a dataset.
    Srf {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        kernel: Option<String>,
        /// Kernel feature dimension D.
        #[arg(long)]
        dim: Option<usize>,
        /// Sketch order k.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        sketch: Option<String>,
        /// Fixed bandwidth instead of the median heuristic.
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo property checks; exits 1 if any fails.
    Check {
        which: CheckKind,
        /// Monte-Carlo trials for the unbiasedness and uniqueness checks.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        kernel: Option<String>,
        /// Comma-separated graph sizes for the distortion check.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Run directory [default: $SRF_OUT_DIR/<command>-<hash>].
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic benchmarks; exits 1 if an assessment fails.
    Bench {
        which: BenchKind,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Comma-separated tree depths (oversquash).
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<usize>>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train one model on a dataset, optionally with a precomputed sidecar.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Sidecar from `srf srf`.
        #[arg(long)]
        srf: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    TreeNm,
    Csl,
    Gnp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    P1,
    P2,
    P3,
    P4,
    P5,
    Srm,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    Expressiveness,
    Oversquash,
    Oversmooth,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(commands::Outcome::Passed) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
