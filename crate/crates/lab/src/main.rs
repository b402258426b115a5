use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pevol_lab::{run, Command, RunConfig, RunOptions};

/// p-evolution packet laboratory.
#[derive(Debug, Parser)]
#[command(name = "pevol", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for per-k experiments; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    /// One of check-condition, lemma1, solve, dichotomy, calculus-tests,
    /// print-defaults; overrides `run.command`.
    #[arg(long)]
    command: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.command.as_deref() == Some("print-defaults") {
        print!("{}", RunConfig::default().canonical());
        return ExitCode::SUCCESS;
    }
    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(name) = &cli.command {
        match name.parse::<Command>() {
            Ok(c) => cfg.run.command = c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    match run(&cfg, &RunOptions { out: cli.out, parallel: cli.parallel }) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::from(report.outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
