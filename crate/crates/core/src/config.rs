//! Run configuration: a plain `key = value` file plus overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys and
//! repeated keys are errors. [`RunConfig::to_pairs`] renders every key, so the
//! echo stored in reports can be fed back to reproduce the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::agents::{AgentConfig, AgentKind, EpsilonSchedule};
use crate::backends::{
    EnvBackendKind, EnvConfig, LatencyInjection, LatencyModel, DEFAULT_REWARD_QUERY_PERIOD_MS,
    DEFAULT_TABLE_PERIOD_MS, DEFAULT_VIRTUAL_SPAWN_MS,
};
use crate::clock::{ms_to_ns, ClockMode};
use crate::domain::{McsIndex, MCS_COUNT};
use crate::linksim::{LinkModel, TraceKind};
use crate::parsers::{ParserStrategy, DEFAULT_CALLS, DEFAULT_REPEATS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Table => "table",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "table" => Ok(OutputFormat::Table),
            other => Err(format!("unknown format `{other}` (expected csv, json, table)")),
        }
    }
}

/// Environment/injection bundles for the end-to-end comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    None,
    /// Stale 100 ms table read through one child process per query.
    Simple,
    /// Fresh files, pattern parser for state and split parser for reward.
    Final,
    /// `Simple` and `Final` back to back.
    Pair,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::None => "none",
            Preset::Simple => "simple",
            Preset::Final => "final",
            Preset::Pair => "pair",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Preset::None),
            "simple" => Ok(Preset::Simple),
            "final" => Ok(Preset::Final),
            "pair" => Ok(Preset::Pair),
            other => Err(format!("unknown preset `{other}` (expected none, simple, final, pair)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub preset: Preset,
    pub backend: EnvBackendKind,
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub agent_checkpoint: Option<PathBuf>,
    pub agent_save: Option<PathBuf>,
    pub initial_mcs: McsIndex,
    pub link: LinkModel,
    pub trace: TraceKind,
    pub steps: u64,
    pub seed: u64,
    pub clock: ClockMode,
    pub out: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub bench_calls: u64,
    pub bench_repeats: u64,
    pub bench_corpus: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let out = PathBuf::from("out");
        RunConfig {
            scenario: "default".into(),
            preset: Preset::None,
            backend: EnvBackendKind::InMemory,
            env: EnvConfig { workdir: out.join("work"), ..EnvConfig::default() },
            agent: AgentConfig::default(),
            agent_checkpoint: None,
            agent_save: None,
            initial_mcs: McsIndex::MIN,
            link: LinkModel::default(),
            trace: TraceKind::Constant { level: -50.0 },
            steps: 10_000,
            seed: 1,
            clock: ClockMode::Virtual,
            out,
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Table],
            bench_calls: DEFAULT_CALLS,
            bench_repeats: DEFAULT_REPEATS,
            bench_corpus: 64,
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "scenario",
    "preset",
    "backend",
    "backend.table_period_ms",
    "backend.stale",
    "backend.virtual_spawn_ms",
    "parser.state",
    "parser.reward",
    "workdir",
    "reward_query_period_ms",
    "inject.set_action_ms",
    "inject.get_reward_ms",
    "inject.get_state_ms",
    "agent",
    "agent.alpha",
    "agent.gamma",
    "agent.lr",
    "agent.batch_size",
    "agent.replay_capacity",
    "agent.hidden",
    "agent.eps_start",
    "agent.eps_end",
    "agent.eps_decay_steps",
    "agent.checkpoint",
    "agent.save",
    "initial_mcs",
    "link.thresholds",
    "link.steepness",
    "link.attempts_rate",
    "trace",
    "trace.level",
    "trace.start",
    "trace.step_std",
    "trace.min",
    "trace.max",
    "trace.levels",
    "trace.dwell_s",
    "steps",
    "seed",
    "clock",
    "out",
    "format",
    "bench.calls",
    "bench.repeats",
    "bench.corpus",
];

/// Parses `key = value` text into ordered pairs, rejecting malformed lines
/// and duplicate keys. Values are not interpreted here.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut seen = BTreeMap::new();
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::new(line, format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if seen.insert(key.clone(), ()).is_some() {
            return Err(ConfigError::new(key, "given more than once"));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::new(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_num(key, v))
        .collect()
}

fn parse_latency(key: &str, value: &str) -> Result<LatencyModel, ConfigError> {
    match value.split_once("..") {
        Some((lo, hi)) => {
            let lo: f64 = parse_num(key, lo.trim())?;
            let hi: f64 = parse_num(key, hi.trim())?;
            if !(lo >= 0.0 && hi >= lo) {
                return Err(ConfigError::new(key, "need 0 <= lo <= hi"));
            }
            Ok(LatencyModel::Uniform { lo_ns: ms_to_ns(lo), hi_ns: ms_to_ns(hi) })
        }
        None => {
            let ms: f64 = parse_num(key, value)?;
            if !(ms.is_finite() && ms >= 0.0) {
                return Err(ConfigError::new(key, "latency must be >= 0"));
            }
            Ok(LatencyModel::fixed_ms(ms))
        }
    }
}

fn format_latency(model: LatencyModel) -> String {
    match model {
        LatencyModel::Fixed { ns } => fmt_ms(ns),
        LatencyModel::Uniform { lo_ns, hi_ns } => format!("{}..{}", fmt_ms(lo_ns), fmt_ms(hi_ns)),
    }
}

fn fmt_ms(ns: u64) -> String {
    format!("{}", ns as f64 / 1e6)
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Trace parameters are gathered first, then assembled, since the trace kind
/// decides which of them apply.
#[derive(Debug, Clone)]
struct TraceParams {
    kind: String,
    level: f64,
    start: f64,
    step_std: f64,
    min: f64,
    max: f64,
    levels: Vec<f64>,
    dwell_s: f64,
}

impl TraceParams {
    fn from_kind(kind: &TraceKind) -> Self {
        let mut p = TraceParams {
            kind: String::new(),
            level: -50.0,
            start: -60.0,
            step_std: 1.0,
            min: -95.0,
            max: -20.0,
            levels: vec![-40.0, -80.0],
            dwell_s: 1.0,
        };
        match kind {
            TraceKind::Constant { level } => {
                p.kind = "constant".into();
                p.level = *level;
            }
            TraceKind::RandomWalk { start, step_std, min, max } => {
                p.kind = "random_walk".into();
                (p.start, p.step_std, p.min, p.max) = (*start, *step_std, *min, *max);
            }
            TraceKind::Step { levels, dwell_s } => {
                p.kind = "step".into();
                p.levels = levels.clone();
                p.dwell_s = *dwell_s;
            }
        }
        p
    }

    fn build(&self) -> Result<TraceKind, ConfigError> {
        let kind = match self.kind.as_str() {
            "constant" => TraceKind::Constant { level: self.level },
            "random_walk" => TraceKind::RandomWalk {
                start: self.start,
                step_std: self.step_std,
                min: self.min,
                max: self.max,
            },
            "step" => TraceKind::Step { levels: self.levels.clone(), dwell_s: self.dwell_s },
            other => {
                return Err(ConfigError::new(
                    "trace",
                    format!("unknown trace `{other}` (expected constant, random_walk, step)"),
                ))
            }
        };
        kind.validate().map_err(|e| ConfigError::new("trace", e.to_string()))?;
        Ok(kind)
    }
}

/// Backend parameters, assembled after all keys are read.
#[derive(Debug, Clone)]
struct BackendParams {
    kind: String,
    table_period_ms: f64,
    stale: bool,
    virtual_spawn_ms: f64,
}

impl BackendParams {
    fn from_kind(kind: &EnvBackendKind) -> Self {
        let mut p = BackendParams {
            kind: kind.name().to_string(),
            table_period_ms: DEFAULT_TABLE_PERIOD_MS,
            stale: false,
            virtual_spawn_ms: DEFAULT_VIRTUAL_SPAWN_MS,
        };
        match kind {
            EnvBackendKind::StaleFile { table_period_ms } => p.table_period_ms = *table_period_ms,
            EnvBackendKind::ExternalCommand { virtual_spawn_ms, table_period_ms } => {
                p.virtual_spawn_ms = *virtual_spawn_ms;
                if let Some(t) = table_period_ms {
                    p.stale = true;
                    p.table_period_ms = *t;
                }
            }
            _ => {}
        }
        p
    }

    fn build(&self) -> Result<EnvBackendKind, ConfigError> {
        let kind = match self.kind.as_str() {
            "in_memory" => EnvBackendKind::InMemory,
            "fresh_file" => EnvBackendKind::FreshFile,
            "stale_file" => EnvBackendKind::StaleFile { table_period_ms: self.table_period_ms },
            "external_command" => EnvBackendKind::ExternalCommand {
                virtual_spawn_ms: self.virtual_spawn_ms,
                table_period_ms: self.stale.then_some(self.table_period_ms),
            },
            other => {
                return Err(ConfigError::new(
                    "backend",
                    format!(
                        "unknown backend `{other}` (expected in_memory, fresh_file, stale_file, external_command)"
                    ),
                ))
            }
        };
        kind.validate().map_err(|e| ConfigError::new("backend", e.to_string()))?;
        Ok(kind)
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::default().with_pairs(&parse_pairs(text)?)
    }

    /// Applies `pairs` on top of `self`; later pairs win.
    pub fn with_pairs(mut self, pairs: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut backend = BackendParams::from_kind(&self.backend);
        let mut trace = TraceParams::from_kind(&self.trace);
        // An empty or default workdir follows `out`.
        let mut workdir = (self.env.workdir != self.out.join("work")).then(|| self.env.workdir.clone());
        for (key, value) in pairs {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "scenario" => self.scenario = v.to_string(),
                "preset" => self.preset = v.parse().map_err(|e| ConfigError::new(k, e))?,
                "backend" => backend.kind = v.to_string(),
                "backend.table_period_ms" => backend.table_period_ms = parse_num(k, v)?,
                "backend.stale" => backend.stale = parse_num(k, v)?,
                "backend.virtual_spawn_ms" => backend.virtual_spawn_ms = parse_num(k, v)?,
                "parser.state" => {
                    self.env.state_parser = v.parse::<ParserStrategy>().map_err(|e| ConfigError::new(k, e))?
                }
                "parser.reward" => {
                    self.env.reward_parser = v.parse::<ParserStrategy>().map_err(|e| ConfigError::new(k, e))?
                }
                "workdir" => workdir = (!v.is_empty()).then(|| PathBuf::from(v)),
                "reward_query_period_ms" => self.env.reward_query_period_ms = parse_num(k, v)?,
                "inject.set_action_ms" => self.env.injection.set_action = parse_latency(k, v)?,
                "inject.get_reward_ms" => self.env.injection.get_reward = parse_latency(k, v)?,
                "inject.get_state_ms" => self.env.injection.get_state = parse_latency(k, v)?,
                "agent" => self.agent.kind = v.parse::<AgentKind>().map_err(|e| ConfigError::new(k, e))?,
                "agent.alpha" => self.agent.alpha = parse_num(k, v)?,
                "agent.gamma" => self.agent.gamma = parse_num(k, v)?,
                "agent.lr" => self.agent.learning_rate = parse_num(k, v)?,
                "agent.batch_size" => self.agent.batch_size = parse_num(k, v)?,
                "agent.replay_capacity" => self.agent.replay_capacity = parse_num(k, v)?,
                "agent.hidden" => self.agent.hidden = parse_list(k, v)?,
                "agent.eps_start" => self.agent.epsilon.start = parse_num(k, v)?,
                "agent.eps_end" => self.agent.epsilon.end = parse_num(k, v)?,
                "agent.eps_decay_steps" => self.agent.epsilon.decay_steps = parse_num(k, v)?,
                "agent.checkpoint" => self.agent_checkpoint = (!v.is_empty()).then(|| PathBuf::from(v)),
                "agent.save" => self.agent_save = (!v.is_empty()).then(|| PathBuf::from(v)),
                "initial_mcs" => {
                    let raw: i64 = parse_num(k, v)?;
                    self.initial_mcs = u8::try_from(raw)
                        .ok()
                        .and_then(|m| McsIndex::new(m).ok())
                        .ok_or_else(|| ConfigError::new(k, format!("mcs {raw} outside [0, 7]")))?;
                }
                "link.thresholds" => {
                    let t: Vec<f64> = parse_list(k, v)?;
                    self.link.thresholds = t.try_into().map_err(|t: Vec<f64>| {
                        ConfigError::new(k, format!("expected {MCS_COUNT} values, got {}", t.len()))
                    })?;
                }
                "link.steepness" => self.link.steepness = parse_num(k, v)?,
                "link.attempts_rate" => self.link.attempts_rate = parse_num(k, v)?,
                "trace" => trace.kind = v.to_string(),
                "trace.level" => trace.level = parse_num(k, v)?,
                "trace.start" => trace.start = parse_num(k, v)?,
                "trace.step_std" => trace.step_std = parse_num(k, v)?,
                "trace.min" => trace.min = parse_num(k, v)?,
                "trace.max" => trace.max = parse_num(k, v)?,
                "trace.levels" => trace.levels = parse_list(k, v)?,
                "trace.dwell_s" => trace.dwell_s = parse_num(k, v)?,
                "steps" => self.steps = parse_num(k, v)?,
                "seed" => self.seed = parse_num(k, v)?,
                "clock" => self.clock = v.parse().map_err(|e| ConfigError::new(k, e))?,
                "out" => self.out = PathBuf::from(v),
                "format" => {
                    self.formats = v
                        .split(',')
                        .map(str::trim)
                        .filter(|f| !f.is_empty())
                        .map(|f| f.parse::<OutputFormat>().map_err(|e| ConfigError::new(k, e)))
                        .collect::<Result<_, _>>()?;
                }
                "bench.calls" => self.bench_calls = parse_num(k, v)?,
                "bench.repeats" => self.bench_repeats = parse_num(k, v)?,
                "bench.corpus" => self.bench_corpus = parse_num(k, v)?,
                _ => return Err(ConfigError::new(k, "unknown key")),
            }
        }
        self.backend = backend.build()?;
        self.trace = trace.build()?;
        self.env.workdir = workdir.unwrap_or_else(|| self.out.join("work"));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.link.validate().map_err(|e| ConfigError::new(link_key(&e), e.to_string()))?;
        self.env
            .validate()
            .map_err(|e| ConfigError::new("reward_query_period_ms", e.to_string()))?;
        self.agent.validate().map_err(|e| ConfigError::new("agent", e.to_string()))?;
        if self.formats.is_empty() {
            return Err(ConfigError::new("format", "at least one format is required"));
        }
        if self.bench_calls == 0 {
            return Err(ConfigError::new("bench.calls", "must be >= 1"));
        }
        if self.bench_repeats == 0 {
            return Err(ConfigError::new("bench.repeats", "must be >= 1"));
        }
        if self.bench_corpus == 0 {
            return Err(ConfigError::new("bench.corpus", "must be >= 1"));
        }
        Ok(())
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let backend = BackendParams::from_kind(&self.backend);
        let trace = TraceParams::from_kind(&self.trace);
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values: Vec<String> = vec![
            self.scenario.clone(),
            self.preset.name().into(),
            backend.kind,
            backend.table_period_ms.to_string(),
            backend.stale.to_string(),
            backend.virtual_spawn_ms.to_string(),
            self.env.state_parser.to_string(),
            self.env.reward_parser.to_string(),
            if self.env.workdir == self.out.join("work") {
                String::new()
            } else {
                self.env.workdir.display().to_string()
            },
            self.env.reward_query_period_ms.to_string(),
            format_latency(self.env.injection.set_action),
            format_latency(self.env.injection.get_reward),
            format_latency(self.env.injection.get_state),
            self.agent.kind.to_string(),
            self.agent.alpha.to_string(),
            self.agent.gamma.to_string(),
            self.agent.learning_rate.to_string(),
            self.agent.batch_size.to_string(),
            self.agent.replay_capacity.to_string(),
            join(&self.agent.hidden),
            self.agent.epsilon.start.to_string(),
            self.agent.epsilon.end.to_string(),
            self.agent.epsilon.decay_steps.to_string(),
            path(&self.agent_checkpoint),
            path(&self.agent_save),
            self.initial_mcs.to_string(),
            join(&self.link.thresholds),
            self.link.steepness.to_string(),
            self.link.attempts_rate.to_string(),
            trace.kind,
            trace.level.to_string(),
            trace.start.to_string(),
            trace.step_std.to_string(),
            trace.min.to_string(),
            trace.max.to_string(),
            join(&trace.levels),
            trace.dwell_s.to_string(),
            self.steps.to_string(),
            self.seed.to_string(),
            self.clock.to_string(),
            self.out.display().to_string(),
            self.formats.iter().map(|f| f.name()).collect::<Vec<_>>().join(","),
            self.bench_calls.to_string(),
            self.bench_repeats.to_string(),
            self.bench_corpus.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Applies a preset's backend and, under a virtual clock, its latency
    /// injections. A real clock keeps whatever the host charges.
    pub fn with_preset(&self, preset: Preset) -> RunConfig {
        let mut c = self.clone();
        c.preset = preset;
        let virtual_clock = c.clock == ClockMode::Virtual;
        match preset {
            Preset::Simple => {
                c.backend = EnvBackendKind::ExternalCommand {
                    virtual_spawn_ms: DEFAULT_VIRTUAL_SPAWN_MS,
                    table_period_ms: Some(DEFAULT_TABLE_PERIOD_MS),
                };
                c.env.reward_query_period_ms = DEFAULT_REWARD_QUERY_PERIOD_MS;
                c.env.injection = if virtual_clock {
                    LatencyInjection::fixed_ms(11.535, 0.0, 0.0)
                } else {
                    LatencyInjection::default()
                };
            }
            Preset::Final => {
                c.backend = EnvBackendKind::FreshFile;
                c.env.reward_query_period_ms = DEFAULT_REWARD_QUERY_PERIOD_MS;
                c.env.state_parser = ParserStrategy::Pattern;
                c.env.reward_parser = ParserStrategy::Split;
                c.env.injection = if virtual_clock {
                    LatencyInjection::fixed_ms(15.105, 0.246, 0.299)
                } else {
                    LatencyInjection::default()
                };
            }
            Preset::None | Preset::Pair => {}
        }
        c
    }

    pub fn epsilon(&self) -> EpsilonSchedule {
        self.agent.epsilon
    }
}

fn link_key(e: &crate::linksim::LinkError) -> &'static str {
    use crate::linksim::LinkError::*;
    match e {
        ThresholdsNotIncreasing => "link.thresholds",
        Steepness(_) => "link.steepness",
        AttemptsRate(_) => "link.attempts_rate",
        Trace(_) => "trace",
    }
}
