//! `alterego`: run the generate / train / backtest / report stages.

use std::path::PathBuf;
use std::process::ExitCode;

use alterego_core::pipeline::{run_stage, RunConfig, Stage};
use anyhow::Context;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "alterego", version, about = "Shadow robo-investor backtests")]
struct Cli {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthetic market, predictors and investor cohort.
    Generate,
    /// Rolling forecast models.
    Train,
    /// Investor returns, robo tracks and spreads.
    Backtest,
    /// Summary tables and regressions.
    Report,
    /// All four stages in order.
    All,
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli)?;
    let stages: &[Stage] = match cli.command {
        Command::Generate => &[Stage::Generate],
        Command::Train => &[Stage::Train],
        Command::Backtest => &[Stage::Backtest],
        Command::Report => &[Stage::Report],
        Command::All => &Stage::ALL,
    };
    for stage in stages {
        let started = std::time::Instant::now();
        run_stage(*stage, &cfg).with_context(|| format!("stage `{stage}` failed"))?;
        log::info!("{stage} finished in {:.1}s", started.elapsed().as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
