//! `kgcl`: prepare data, mine content pairs, train, evaluate, recommend and
//! tabulate results.

mod commands;
mod config;
mod report;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use kgcl_core::synthetic::PlantedSpec;
use kgcl_core::Error;
use log::error;

use config::{parse_override, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "kgcl",
    version,
    about = "Knowledge-graph recommender with a content contrastive loss"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override, global = true)]
    overrides: Vec<(String, String)>,

    /// Output directory (beats KGCL_OUT_DIR and the config file).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split interactions and re-index ids into the data directory.
    Prepare,
    /// Mine positive and negative content pairs.
    SamplePairs {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train and write the checkpoint plus the per-epoch log.
    Train,
    /// Compute CTR, top-K, diversity, geometry and cold-start metrics.
    Evaluate {
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write top-K unseen contents per user.
    Recommend {
        /// Raw user ids, comma separated; all users when omitted.
        #[arg(long, value_delimiter = ',')]
        users: Option<Vec<usize>>,
        #[arg(long, short, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate evaluated runs (`[label=]dir` or metrics.json) by arm.
    Report {
        #[arg(required = true)]
        runs: Vec<String>,
        /// Arm the others are tested against.
        #[arg(long, default_value = "baseline")]
        baseline: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write one config per experimental arm.
    Matrix {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Write a planted synthetic dataset with a ready-to-run config.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long, default_value_t = 0.0)]
        cold_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_)) => 2,
        Some(Error::Numeric(_)) => 4,
        Some(_) => 3,
        None => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let load = || RunConfig::load(cli.config.as_deref(), &cli.overrides, cli.out_dir.as_deref());
    match &cli.command {
        Command::Prepare => commands::prepare(&load()?)?,
        Command::SamplePairs { output } => {
            commands::sample_pairs(&load()?, output.as_deref())?;
        }
        Command::Train => commands::train(&load()?)?,
        Command::Evaluate { split, checkpoint } => commands::evaluate(&load()?, split, checkpoint.as_deref())?,
        Command::Recommend {
            users,
            k,
            checkpoint,
            output,
        } => {
            commands::recommend(&load()?, users.as_deref(), *k, checkpoint.as_deref(), output.as_deref())?;
        }
        Command::Report { runs, baseline, output } => {
            let runs = runs
                .iter()
                .map(|r| report::read_run(r))
                .collect::<kgcl_core::Result<Vec<_>>>()?;
            let text = report::render_report(&runs, baseline);
            match output {
                Some(path) => commands::write_file(path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Matrix { dir } => {
            for path in commands::matrix(&load()?, dir)? {
                println!("{}", path.display());
            }
        }
        Command::Synth {
            dir,
            users,
            cold_fraction,
            seed,
        } => {
            let spec = PlantedSpec {
                num_users: *users,
                cold_fraction: *cold_fraction,
                seed: *seed,
                ..PlantedSpec::default()
            };
            let path = commands::synth(&spec, dir).context("writing the synthetic dataset")?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
