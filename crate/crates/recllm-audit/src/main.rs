//! Thin CLI over the library: ingest, run, recompute, report, stats.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use recllm_audit::runner::{self, ExperimentConfig, ProviderKind};

#[derive(Parser)]
#[command(
    name = "recllm-audit",
    about = "Batch auditing harness for LLM-based recommenders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the provider kind.
    #[arg(long)]
    provider: Option<ProviderKind>,
    /// Override the statistics seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the dataset, apply preprocessing, and print statistics.
    Ingest {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Execute the configured experiment matrix end to end.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Reuse completed cells from an interrupted run.
        #[arg(long)]
        resume: bool,
    },
    /// Recompute all metrics offline from stored transcripts.
    Recompute {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Re-render result tables from a results directory.
    Report {
        /// Results directory containing manifest.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print dataset statistics (after k-core, before splitting).
    Stats {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, runner::RunnerError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(provider) = args.provider {
        cfg.provider.kind = provider;
    }
    if let Some(seed) = args.seed {
        cfg.stats.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), runner::RunnerError> {
    match cli.command {
        Command::Ingest { config } => {
            let cfg = load_config(&config)?;
            let report = runner::ingest(&cfg)?;
            let mut out = Vec::new();
            report
                .stats
                .write_csv(&mut out)
                .expect("writing to a vec cannot fail");
            print!("{}", String::from_utf8_lossy(&out));
            println!("train_interactions,{}", report.train_interactions);
            if let Some(v) = report.validation_interactions {
                println!("validation_interactions,{v}");
            }
            println!("test_interactions,{}", report.test_interactions);
            println!("dropped_users,{}", report.dropped_users);
        }
        Command::Run { config, resume } => {
            let cfg = load_config(&config)?;
            let outcome = runner::run_experiment(&cfg, resume)?;
            eprintln!(
                "run complete: {} cells ok, {} failed, {} users, {} calls, ${:.4}",
                outcome.cells_completed,
                outcome.cells_failed,
                outcome.users,
                outcome.ledger.calls,
                outcome.ledger.total_cost,
            );
            eprintln!("results: {}", outcome.results_dir.display());
        }
        Command::Recompute { config } => {
            let cfg = load_config(&config)?;
            let results_dir = cfg.output.dir.clone();
            runner::recompute(&cfg, &results_dir)?;
            eprintln!("metrics recomputed under {}", results_dir.display());
        }
        Command::Report { out } => {
            runner::render_tables(&out)?;
            eprintln!("tables rendered under {}", out.join("report").display());
        }
        Command::Stats { config } => {
            let cfg = load_config(&config)?;
            let stats = runner::dataset_statistics(&cfg)?;
            let mut out = Vec::new();
            stats
                .write_csv(&mut out)
                .expect("writing to a vec cannot fail");
            print!("{}", String::from_utf8_lossy(&out));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
