//! Environment side of the control loop: action deployment, reward-stats
//! query, and state query over the simulated link.
//!
//! The four backend kinds differ only in how stats reach the caller:
//!
//! | kind               | reward / state source                                  |
//! |--------------------|--------------------------------------------------------|
//! | `InMemory`         | live simulator counters and RSS                        |
//! | `FreshFile`        | files rendered at query time, then read and parsed      |
//! | `StaleFile`        | files rendered once per table tick, read and parsed     |
//! | `ExternalCommand`  | like the file kinds, but each read goes through `cat`   |
//!
//! Stale reads block. After the reward query period, a step waits for the
//! first table tick at or after the end of its observation window, so a
//! 100 ms table forces steps of at least 100 ms.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ms_to_ns, SimClock};
use crate::domain::{
    compute_fsr, compute_reward, DomainError, FrameStats, LinkObservation, McsIndex, RewardValue,
};
use crate::linksim::Link;
use crate::parsers::{
    render_reward_file, render_state_file, ParseError, ParserStrategy, RewardParser, StateParser,
    REWARD_FILE_NAME, STATE_FILE_NAME,
};
use crate::rng::{self, SimRng, Stream};

pub const DEFAULT_TABLE_PERIOD_MS: f64 = 100.0;
pub const DEFAULT_REWARD_QUERY_PERIOD_MS: f64 = 50.0;
/// Per-query charge for `ExternalCommand` under a virtual clock.
pub const DEFAULT_VIRTUAL_SPAWN_MS: f64 = 13.0;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvBackendKind {
    InMemory,
    FreshFile,
    StaleFile {
        table_period_ms: f64,
    },
    /// One child process per query. `table_period_ms` makes the table stale
    /// as in `StaleFile`; `None` renders fresh files.
    ExternalCommand {
        virtual_spawn_ms: f64,
        table_period_ms: Option<f64>,
    },
}

impl EnvBackendKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvBackendKind::InMemory => "in_memory",
            EnvBackendKind::FreshFile => "fresh_file",
            EnvBackendKind::StaleFile { .. } => "stale_file",
            EnvBackendKind::ExternalCommand { .. } => "external_command",
        }
    }

    pub fn stale_file() -> Self {
        EnvBackendKind::StaleFile { table_period_ms: DEFAULT_TABLE_PERIOD_MS }
    }

    pub fn uses_files(&self) -> bool {
        !matches!(self, EnvBackendKind::InMemory)
    }

    pub fn table_period_ms(&self) -> Option<f64> {
        match self {
            EnvBackendKind::StaleFile { table_period_ms } => Some(*table_period_ms),
            EnvBackendKind::ExternalCommand { table_period_ms, .. } => *table_period_ms,
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if let Some(p) = self.table_period_ms() {
            if !(p.is_finite() && p > 0.0) {
                return Err(BackendError::Config(format!("table_period_ms must be > 0, got {p}")));
            }
        }
        if let EnvBackendKind::ExternalCommand { virtual_spawn_ms, .. } = self {
            if !(virtual_spawn_ms.is_finite() && *virtual_spawn_ms >= 0.0) {
                return Err(BackendError::Config(format!(
                    "virtual_spawn_ms must be >= 0, got {virtual_spawn_ms}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for EnvBackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Extra latency charged to a stage, on top of whatever the host charges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyModel {
    Fixed { ns: u64 },
    /// Uniform over `[lo_ns, hi_ns]`, drawn from the latency rng stream.
    Uniform { lo_ns: u64, hi_ns: u64 },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Fixed { ns: 0 }
    }
}

impl LatencyModel {
    pub fn fixed_ms(ms: f64) -> Self {
        LatencyModel::Fixed { ns: ms_to_ns(ms) }
    }

    fn sample(&self, rng: &mut SimRng) -> u64 {
        match *self {
            LatencyModel::Fixed { ns } => ns,
            LatencyModel::Uniform { lo_ns, hi_ns } => lo_ns + rng::below(rng, hi_ns - lo_ns + 1),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        match *self {
            LatencyModel::Uniform { lo_ns, hi_ns } if lo_ns > hi_ns => Err(BackendError::Config(
                format!("uniform latency lo {lo_ns} > hi {hi_ns}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyInjection {
    pub set_action: LatencyModel,
    pub get_reward: LatencyModel,
    pub get_state: LatencyModel,
}

impl LatencyInjection {
    /// Fixed per-stage injections given in milliseconds.
    pub fn fixed_ms(set_action: f64, get_reward: f64, get_state: f64) -> Self {
        LatencyInjection {
            set_action: LatencyModel::fixed_ms(set_action),
            get_reward: LatencyModel::fixed_ms(get_reward),
            get_state: LatencyModel::fixed_ms(get_state),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub reward_query_period_ms: f64,
    pub injection: LatencyInjection,
    /// Directory for the file-backed kinds. It must already exist.
    pub workdir: PathBuf,
    pub state_parser: ParserStrategy,
    pub reward_parser: ParserStrategy,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            reward_query_period_ms: DEFAULT_REWARD_QUERY_PERIOD_MS,
            injection: LatencyInjection::default(),
            workdir: std::env::temp_dir(),
            state_parser: ParserStrategy::Pattern,
            reward_parser: ParserStrategy::Split,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let p = self.reward_query_period_ms;
        if !(p.is_finite() && p > 0.0) {
            return Err(BackendError::Config(format!("reward_query_period_ms must be > 0, got {p}")));
        }
        self.injection.set_action.validate()?;
        self.injection.get_reward.validate()?;
        self.injection.get_state.validate()
    }
}

/// Per-step stage durations in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub decide: u64,
    pub train: u64,
    pub set_action: u64,
    pub reward_wait: u64,
    pub get_reward: u64,
    pub get_state: u64,
}

impl StageTimings {
    pub const NAMES: [&'static str; 6] =
        ["decide", "train", "set_action", "reward_wait", "get_reward", "get_state"];

    pub fn as_array(&self) -> [u64; 6] {
        [self.decide, self.train, self.set_action, self.reward_wait, self.get_reward, self.get_state]
    }

    pub fn total(&self) -> u64 {
        self.as_array().iter().sum()
    }

    pub fn environment(&self) -> u64 {
        self.set_action + self.reward_wait + self.get_reward + self.get_state
    }

    pub fn agent(&self) -> u64 {
        self.decide + self.train
    }
}

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub fsr: f64,
    pub reward: RewardValue,
    pub observation: LinkObservation,
    /// Environment stages only; `decide` and `train` are zero.
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Copy)]
struct TableSnapshot {
    tick: u64,
    stats: FrameStats,
    rss: f64,
}

pub struct Environment {
    kind: EnvBackendKind,
    config: EnvConfig,
    link: Link,
    latency_rng: SimRng,
    decor_rng: SimRng,
    state_parser: StateParser,
    reward_parser: RewardParser,
    table_period_ns: Option<u64>,
    table: TableSnapshot,
    rendered_tick: Option<u64>,
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Environment")
            .field("kind", &self.kind)
            .field("link_time_ns", &self.link.time_ns())
            .finish_non_exhaustive()
    }
}

impl Environment {
    pub fn new(
        kind: EnvBackendKind,
        config: EnvConfig,
        link: Link,
        seed: u64,
    ) -> Result<Self, BackendError> {
        kind.validate()?;
        config.validate()?;
        let table_period_ns = kind.table_period_ms().map(|ms| ms_to_ns(ms).max(1));
        let table = TableSnapshot { tick: 0, stats: link.counters(), rss: link.rss() };
        let env = Environment {
            state_parser: StateParser::new(config.state_parser),
            reward_parser: RewardParser::new(config.reward_parser),
            kind,
            config,
            link,
            latency_rng: rng::stream(seed, Stream::Latency),
            decor_rng: rng::stream(seed, Stream::Decor),
            table_period_ns,
            table,
            rendered_tick: None,
        };
        env.check_workdir()?;
        Ok(env)
    }

    pub fn kind(&self) -> &EnvBackendKind {
        &self.kind
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Direct link access for setup, such as the initial MCS. Bypasses the
    /// injected latencies.
    pub fn link_mut(&mut self) -> &mut Link {
        &mut self.link
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    fn check_workdir(&self) -> Result<(), BackendError> {
        if self.kind.uses_files() && !self.config.workdir.is_dir() {
            return Err(BackendError::Unavailable(format!(
                "workdir {} does not exist",
                self.config.workdir.display()
            )));
        }
        Ok(())
    }

    /// Brings the simulator (and the stale table) up to the clock.
    fn sync(&mut self, clock: &SimClock) {
        let now = clock.now_ns();
        if let Some(period) = self.table_period_ns {
            let mut next = (self.table.tick + 1) * period;
            while next <= now {
                self.link.advance_to(next);
                self.table = TableSnapshot {
                    tick: self.table.tick + 1,
                    stats: self.link.counters(),
                    rss: self.link.rss(),
                };
                next += period;
            }
        }
        self.link.advance_to(now);
    }

    fn inject(&mut self, model: LatencyModel, clock: &SimClock) {
        let ns = model.sample(&mut self.latency_rng);
        clock.wait(ns);
    }

    /// Counter values the backend would report right now, without any I/O.
    fn visible_stats(&self) -> FrameStats {
        match self.table_period_ns {
            Some(_) => self.table.stats,
            None => self.link.counters(),
        }
    }

    fn visible_rss(&self) -> f64 {
        match self.table_period_ns {
            Some(_) => self.table.rss,
            None => self.link.rss(),
        }
    }

    fn file_path(&self, name: &str) -> PathBuf {
        self.config.workdir.join(name)
    }

    /// Writes both stat files if their content may have changed.
    fn render_files(&mut self) -> Result<(), BackendError> {
        if self.table_period_ns.is_some() && self.rendered_tick == Some(self.table.tick) {
            return Ok(());
        }
        let state = render_state_file(LinkObservation::new(self.visible_rss()), &mut self.decor_rng);
        let reward = render_reward_file(self.visible_stats());
        write_file(&self.file_path(STATE_FILE_NAME), &state)?;
        write_file(&self.file_path(REWARD_FILE_NAME), &reward)?;
        self.rendered_tick = Some(self.table.tick);
        Ok(())
    }

    fn read_file(&self, name: &str, clock: &SimClock) -> Result<String, BackendError> {
        let path = self.file_path(name);
        match &self.kind {
            EnvBackendKind::ExternalCommand { virtual_spawn_ms, .. } => {
                if clock.is_virtual() {
                    clock.wait(ms_to_ns(*virtual_spawn_ms));
                    read_file(&path)
                } else {
                    read_via_command(&path)
                }
            }
            _ => read_file(&path),
        }
    }

    /// Deploys `mcs`. Injected deploy latency elapses before the new rate
    /// takes effect on the link.
    pub fn set_action(&mut self, mcs: McsIndex, clock: &SimClock) -> Result<(), BackendError> {
        self.check_workdir()?;
        self.sync(clock);
        self.inject(self.config.injection.set_action, clock);
        self.sync(clock);
        self.link.set_mcs(mcs);
        Ok(())
    }

    pub fn get_state(&mut self, clock: &SimClock) -> Result<LinkObservation, BackendError> {
        self.sync(clock);
        let obs = if self.kind.uses_files() {
            self.render_files()?;
            let text = self.read_file(STATE_FILE_NAME, clock)?;
            LinkObservation::new(self.state_parser.parse(&text)? as f64)
        } else {
            self.link.observation()
        };
        self.inject(self.config.injection.get_state, clock);
        Ok(obs)
    }

    pub fn get_reward_stats(&mut self, clock: &SimClock) -> Result<FrameStats, BackendError> {
        self.sync(clock);
        let stats = if self.kind.uses_files() {
            self.render_files()?;
            let text = self.read_file(REWARD_FILE_NAME, clock)?;
            self.reward_parser.parse(&text)?
        } else {
            self.link.counters()
        };
        self.inject(self.config.injection.get_reward, clock);
        Ok(stats)
    }

    /// One environment step: snapshot, deploy, wait, read reward stats,
    /// compute the reward, read the next state.
    ///
    /// The opening snapshot is in-memory bookkeeping of what the backend
    /// currently exposes and is not a timed stage.
    pub fn step(&mut self, mcs: McsIndex, clock: &SimClock) -> Result<EnvStep, BackendError> {
        self.sync(clock);
        let before = self.visible_stats();

        let t0 = clock.now_ns();
        self.set_action(mcs, clock)?;
        let t1 = clock.now_ns();

        clock.wait(ms_to_ns(self.config.reward_query_period_ms));
        if let Some(period) = self.table_period_ns {
            let now = clock.now_ns();
            clock.wait_until(now.div_ceil(period) * period);
        }
        let t2 = clock.now_ns();

        let after = self.get_reward_stats(clock)?;
        let t3 = clock.now_ns();
        let observation = self.get_state(clock)?;
        let t4 = clock.now_ns();

        let fsr = compute_fsr(before, after)?;
        let reward = compute_reward(fsr, mcs)?;
        Ok(EnvStep {
            fsr,
            reward,
            observation,
            timings: StageTimings {
                decide: 0,
                train: 0,
                set_action: t1 - t0,
                reward_wait: t2 - t1,
                get_reward: t3 - t2,
                get_state: t4 - t3,
            },
        })
    }
}

pub fn step_environment(
    env: &mut Environment,
    mcs: McsIndex,
    clock: &SimClock,
) -> Result<EnvStep, BackendError> {
    env.step(mcs, clock)
}

fn unavailable(path: &Path, err: impl fmt::Display) -> BackendError {
    BackendError::Unavailable(format!("{}: {err}", path.display()))
}

fn write_file(path: &Path, content: &str) -> Result<(), BackendError> {
    fs::write(path, content).map_err(|e| unavailable(path, e))
}

fn read_file(path: &Path) -> Result<String, BackendError> {
    fs::read_to_string(path).map_err(|e| unavailable(path, e))
}

fn read_via_command(path: &Path) -> Result<String, BackendError> {
    let out = Command::new("cat").arg(path).output().map_err(|e| unavailable(path, e))?;
    if !out.status.success() {
        return Err(unavailable(path, format!("cat exited with {}", out.status)));
    }
    String::from_utf8(out.stdout).map_err(|e| unavailable(path, e))
}
