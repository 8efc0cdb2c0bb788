//! `splitchain`: vertical split-learning pipeline runner.
//!
//! Subcommands: `prepare` (ingest or synthesize data), `train` (local,
//! decentralized, or centralized training), `infer` (three-leg inference
//! round trip), `compare` (side-by-side metrics). Exit codes: 0 success,
//! 2 input error, 3 state error, 4 internal error.

mod common;
mod compare;
mod error;
mod infer;
mod prepare;
mod train;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Result;

#[derive(Parser)]
#[command(
    name = "splitchain",
    version,
    about = "Vertical split learning over a content-addressed, ledger-registered exchange fabric"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a loan CSV (or synthesize one) and write engineered,
    /// split, and vertically partitioned artifacts.
    Prepare {
        /// Source CSV with the raw loan schema.
        #[arg(long, env = "SPLITCHAIN_CSV")]
        csv: Option<PathBuf>,
        /// Synthetic source spec, e.g. "n=5000,rate=0.096".
        #[arg(long, env = "SPLITCHAIN_SYNTHETIC")]
        synthetic: Option<String>,
        #[arg(long, default_value_t = 42, env = "SPLITCHAIN_SEED")]
        seed: u64,
        /// Train fraction of the train/test split.
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        /// Stratify the split by label.
        #[arg(long)]
        stratified: bool,
        /// |Pearson correlation| below which a feature is dropped.
        #[arg(long, default_value_t = 0.0068)]
        corr_threshold: f64,
        #[arg(long, default_value = "Personal Loan")]
        label_col: String,
        #[arg(long, default_value = "Income")]
        income_col: String,
        #[arg(long, default_value = "CCAvg")]
        spending_col: String,
        #[arg(long, env = "SPLITCHAIN_OUT")]
        out: PathBuf,
    },
    /// Train in one of the four modes on prepared artifacts.
    Train {
        #[arg(long, env = "SPLITCHAIN_MODE")]
        mode: train::Mode,
        /// Directory written by `prepare`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, env = "SPLITCHAIN_OUT")]
        out: PathBuf,
        #[arg(long, default_value_t = 42, env = "SPLITCHAIN_SEED")]
        seed: u64,
        #[arg(long, default_value_t = 50, env = "SPLITCHAIN_EPOCHS")]
        epochs: usize,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Blob store root (defaults to `<out>/store`).
        #[arg(long, env = "SPLITCHAIN_STORE_ROOT")]
        store_root: Option<PathBuf>,
        /// Ledger journal path (defaults to `<out>/ledger.journal`).
        #[arg(long, env = "SPLITCHAIN_LEDGER")]
        ledger: Option<PathBuf>,
        #[arg(long, default_value = "run-1", env = "SPLITCHAIN_RUN_ID")]
        run_id: String,
        /// Also render `curves-<model>.svg` next to the CSV curves.
        #[arg(long)]
        plot: bool,
    },
    /// Run the inference round trip of a trained decentralized run.
    Infer {
        /// Run directory (or manifest.json path) of a decentralized run.
        #[arg(long)]
        run: PathBuf,
        /// CSV with the full feature columns for the samples to score.
        #[arg(long)]
        input: PathBuf,
        /// Predictions file (defaults to `predictions-<run-id>.csv` in
        /// the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "SPLITCHAIN_RUN_ID")]
        run_id: Option<String>,
    },
    /// Compare a decentralized run against a centralized baseline.
    Compare {
        #[arg(long)]
        decentralized: PathBuf,
        #[arg(long)]
        centralized: PathBuf,
        /// Directory for comparison.txt / comparison.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare {
            csv,
            synthetic,
            seed,
            ratio,
            stratified,
            corr_threshold,
            label_col,
            income_col,
            spending_col,
            out,
        } => prepare::run(&prepare::PrepareArgs {
            csv,
            synthetic,
            seed,
            ratio,
            stratified,
            corr_threshold,
            label_col,
            income_col,
            spending_col,
            out,
        }),
        Command::Train {
            mode,
            data,
            out,
            seed,
            epochs,
            batch_size,
            store_root,
            ledger,
            run_id,
            plot,
        } => train::run(&train::TrainArgs {
            mode,
            data,
            out,
            seed,
            epochs,
            batch_size,
            store_root,
            ledger,
            run_id,
            plot,
        }),
        Command::Infer {
            run,
            input,
            out,
            run_id,
        } => infer::run(&infer::InferArgs {
            run,
            input,
            out,
            run_id,
        }),
        Command::Compare {
            decentralized,
            centralized,
            out,
        } => compare::run(&compare::CompareArgs {
            decentralized,
            centralized,
            out,
        }),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
