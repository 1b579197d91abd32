use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ratelab::cli::{cmd_bench_parse, cmd_oracle, cmd_profile, cmd_run, CliError};
use ratelab::config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "ratelab", version, about = "Profile an RL rate-adaptation loop on a simulated link")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    steps: Option<u64>,
    /// virtual or real.
    #[arg(long, global = true)]
    clock: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated list of csv, json, table.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Extra `key=value` override; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the loop and write a per-step log.
    Run,
    /// Profile every stage; `--set preset=pair` compares both presets.
    Profile,
    /// Benchmark the stat-file parsers.
    BenchParse,
    /// Write the best MCS for every RSS bin.
    Oracle,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut pairs = ratelab::config::parse_pairs(&text)?;
    let flags = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("steps", args.steps.map(|v| v.to_string())),
        ("clock", args.clock.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("format", args.format.clone()),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    for s in &args.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::new(s.as_str(), "expected KEY=VALUE"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(RunConfig::default().with_pairs(&pairs)?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load(&args).and_then(|config| match args.command {
        Command::Run => cmd_run(&config),
        Command::Profile => cmd_profile(&config),
        Command::BenchParse => cmd_bench_parse(&config),
        Command::Oracle => cmd_oracle(&config),
    });
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
