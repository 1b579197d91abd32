//! Library side of the command-line tool. Each command reads a
//! [`RunConfig`], writes its artifacts under `config.out`, and returns a
//! short summary for the terminal. Under a virtual clock every artifact is
//! byte-identical across runs with the same config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::clock::SimClock;
use crate::config::{ConfigError, OutputFormat, Preset, RunConfig};
use crate::domain::{McsIndex, StateBin};
use crate::linksim::{expected_reward, oracle_best_mcs};
use crate::parsers::{bench_parsers, BenchCorpus};
use crate::profiler::{export_report, run_loop, run_profile, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for configuration problems, 1 for anything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CmdOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn prepare(config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.out).map_err(runtime)?;
    if config.backend.uses_files() {
        fs::create_dir_all(&config.env.workdir).map_err(runtime)?;
    }
    Ok(())
}

fn write(out: &mut CmdOutput, path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(runtime)?;
    }
    fs::write(&path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    out.files.push(path);
    Ok(())
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
        OutputFormat::Table => "txt",
    }
}

/// Runs the loop and writes the per-step log to `steps.csv`.
pub fn cmd_run(config: &RunConfig) -> Result<CmdOutput, CliError> {
    prepare(config)?;
    let mut log = csv::Writer::from_writer(Vec::new());
    log.write_record([
        "step", "rss", "action", "fsr", "reward", "decide_ns", "train_ns", "set_action_ns",
        "reward_wait_ns", "get_reward_ns", "get_state_ns",
    ])
    .map_err(runtime)?;
    let mut reward_sum = 0.0;
    let mut csv_err = None;
    let (samples, error) = run_loop(config, true, |r| {
        reward_sum += r.reward;
        let mut row = vec![
            r.step.to_string(),
            r.rss_dbm.to_string(),
            r.action.to_string(),
            r.fsr.to_string(),
            r.reward.to_string(),
        ];
        row.extend(r.timing.stages.as_array().iter().map(u64::to_string));
        if let Err(e) = log.write_record(&row) {
            csv_err.get_or_insert(e);
        }
    })
    .map_err(runtime)?;
    if let Some(e) = csv_err {
        return Err(runtime(e));
    }
    let mut out = CmdOutput::default();
    let bytes = log.into_inner().map_err(runtime)?;
    write(&mut out, config.out.join("steps.csv"), bytes)?;
    let n = samples.len().max(1) as f64;
    out.summary = format!(
        "{} steps, mean reward {:.4}\n",
        samples.len(),
        if samples.is_empty() { 0.0 } else { reward_sum / n }
    );
    match error {
        Some(e) => Err(runtime(format!("stopped after {} steps: {e}", samples.len()))),
        None => Ok(out),
    }
}

fn write_report(
    out: &mut CmdOutput,
    dir: &Path,
    config: &RunConfig,
    report: &RunReport,
) -> Result<(), CliError> {
    for &format in &config.formats {
        let text = export_report(report, format).map_err(runtime)?;
        write(out, dir.join(format!("report.{}", extension(format))), text)?;
    }
    Ok(())
}

fn profile_one(config: &RunConfig, dir: &Path, out: &mut CmdOutput) -> Result<RunReport, CliError> {
    prepare(config)?;
    let report = run_profile(config).map_err(runtime)?;
    if report.steps_completed > 0 {
        write_report(out, dir, config, &report)?;
    }
    match &report.error {
        Some(e) => Err(runtime(format!("stopped after {} steps: {e}", report.steps_completed))),
        None => Ok(report),
    }
}

/// Environment, agent, and total mean per step in milliseconds, one row
/// per preset.
pub fn comparison_table(rows: &[(&str, &RunReport)]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{:<8} {:>16} {:>12} {:>12}", "preset", "environment_ms", "agent_ms", "total_ms");
    for (name, r) in rows {
        let env = r.environment_mean_ns.unwrap_or(0.0) / 1e6;
        let agent = r.agent_mean_ns.unwrap_or(0.0) / 1e6;
        let total = r.totals.map_or(0.0, |s| s.mean) / 1e6;
        let _ = writeln!(t, "{name:<8} {env:>16.3} {agent:>12.3} {total:>12.3}");
    }
    t
}

/// Profiles the config, or both presets when `preset = pair`.
///
/// A single run writes `report.*` under `out`. A pair writes
/// `simple/report.*`, `final/report.*`, and `comparison.txt`.
pub fn cmd_profile(config: &RunConfig) -> Result<CmdOutput, CliError> {
    let mut out = CmdOutput::default();
    match config.preset {
        Preset::Pair => {
            let mut reports = Vec::new();
            for preset in [Preset::Simple, Preset::Final] {
                let mut c = config.with_preset(preset);
                c.out = config.out.join(preset.name());
                let dir = c.out.clone();
                reports.push((preset.name(), profile_one(&c, &dir, &mut out)?));
            }
            let rows: Vec<_> = reports.iter().map(|(n, r)| (*n, r)).collect();
            let table = comparison_table(&rows);
            write(&mut out, config.out.join("comparison.txt"), &table)?;
            out.summary = table;
        }
        preset => {
            let c = config.with_preset(preset);
            let report = profile_one(&c, &config.out, &mut out)?;
            out.summary = comparison_table(&[(preset.name(), &report)]);
        }
    }
    Ok(out)
}

/// Benchmarks every parser strategy on a seeded corpus.
pub fn cmd_bench_parse(config: &RunConfig) -> Result<CmdOutput, CliError> {
    if config.bench_calls == 0 {
        return Err(ConfigError::new("bench.calls", "must be >= 1").into());
    }
    if config.bench_repeats == 0 {
        return Err(ConfigError::new("bench.repeats", "must be >= 1").into());
    }
    prepare(config)?;
    let corpus = BenchCorpus::generate(config.seed, config.bench_corpus);
    let clock = SimClock::new(config.clock);
    let report = bench_parsers(&corpus, config.bench_calls, config.bench_repeats, &clock);
    let mut out = CmdOutput::default();
    for &format in &config.formats {
        let bytes = match format {
            OutputFormat::Csv => report.to_csv().map_err(runtime)?,
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&report).map_err(runtime)?;
                s.push('\n');
                s.into_bytes()
            }
            OutputFormat::Table => report.to_table().into_bytes(),
        };
        write(&mut out, config.out.join(format!("bench_parse.{}", extension(format))), bytes)?;
    }
    out.summary = report.to_table();
    Ok(out)
}

/// Best MCS and expected rewards for every state bin, as CSV.
pub fn oracle_csv(config: &RunConfig) -> String {
    let mut s = String::from("rss_bin,best_mcs,best_reward");
    for m in McsIndex::all() {
        let _ = write!(s, ",reward_mcs{m}");
    }
    s.push('\n');
    for bin in StateBin::all() {
        let rss = bin.dbm() as f64;
        let best = oracle_best_mcs(&config.link, rss);
        let _ = write!(s, "{},{},{}", bin.dbm(), best, expected_reward(&config.link, best, rss));
        for m in McsIndex::all() {
            let _ = write!(s, ",{}", expected_reward(&config.link, m, rss));
        }
        s.push('\n');
    }
    s
}

pub fn cmd_oracle(config: &RunConfig) -> Result<CmdOutput, CliError> {
    prepare(config)?;
    let mut out = CmdOutput::default();
    let csv = oracle_csv(config);
    write(&mut out, config.out.join("oracle.csv"), &csv)?;
    out.summary = format!("{} state bins\n", csv.lines().count() - 1);
    Ok(out)
}
