use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nr_cba::commands::{cmd_dataset, cmd_evaluate, cmd_sweep, cmd_train};
use nr_cba::{with_pool, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "nr-cba", version, about = "Codebook adaptation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate labeled indicator sequences per UE.
    Dataset(Common),
    /// Federated ESN training plus perceptron and KNN baselines.
    Train(Common),
    /// Compare policies on stale CSI over scenarios and SNRs.
    Evaluate(Common),
    /// Dataset, training and evaluation across the SNR grid.
    Sweep(Common),
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (name, common) = match &cli.command {
        Command::Dataset(c) => ("dataset", c),
        Command::Train(c) => ("train", c),
        Command::Evaluate(c) => ("evaluate", c),
        Command::Sweep(c) => ("sweep", c),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    let out = common.out.clone();
    eprintln!("nr-cba {name}: config {} -> {}", cfg.hash(), out.display());
    with_pool(common.parallel, move || match name {
        "dataset" => cmd_dataset(&cfg, &out).map(|_| ()),
        "train" => cmd_train(&cfg, &out).map(|s| {
            if let Some(last) = s.esn_rounds.last() {
                eprintln!("esn val loss {:.4}, acc {:.3}", last.val_loss, last.val_acc);
            }
        }),
        "evaluate" => cmd_evaluate(&cfg, &out).map(|_| ()),
        _ => cmd_sweep(&cfg, &out).map(|_| ()),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
