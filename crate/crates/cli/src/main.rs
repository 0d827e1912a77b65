//! `adiv`: attention-divergence feature extraction, probing and analysis.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "adiv", version, about = "Attention divergence hallucination probe toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pool per-head divergence features from an attention dump
    ExtractFeatures(RunConfig),
    /// Cross-validate the sparse probe and fit it on all examples
    Train(RunConfig),
    /// Re-run cross-validation with heads, layers, pooling or scope changed
    Ablate(RunConfig),
    /// delta-map, ecdf, words or heads analyses
    Analyze(RunConfig),
    /// Surface-feature baselines and the permuted-label control
    Sanity(RunConfig),
    /// Write a synthetic Dirichlet attention dump
    Synth(RunConfig),
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn run(command: Command) -> adiv_core::Result<()> {
    let (flags, action): (RunConfig, fn(&RunConfig) -> adiv_core::Result<()>) = match command {
        Command::ExtractFeatures(c) => (c, commands::extract_cmd),
        Command::Train(c) => (c, commands::train_cmd),
        Command::Ablate(c) => (c, commands::ablate),
        Command::Analyze(c) => (c, commands::analyze),
        Command::Sanity(c) => (c, commands::sanity),
        Command::Synth(c) => (c, commands::synth),
    };
    let cfg = RunConfig::resolve(flags)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build_global()
        .map_err(|e| adiv_core::Error::Config(format!("worker pool: {e}")))?;
    log::debug!("resolved configuration: {cfg:?}");
    action(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ADIV_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::from(1)
        }
    }
}
