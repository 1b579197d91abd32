//! Stage timing, box-plot summaries, and the profiled control loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::agents::{load_agent, save_agent, Agent, AgentError};
use crate::backends::{BackendError, Environment, StageTimings};
use crate::clock::SimClock;
use crate::config::{OutputFormat, RunConfig};
use crate::domain::{discretize_rss, McsIndex, Transition};
use crate::linksim::Link;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("no samples to summarize")]
    EmptyInput,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("setup: {0}")]
    Setup(String),
}

/// Runs `op` and returns its result with the elapsed clock time.
pub fn time_stage<T>(clock: &SimClock, op: impl FnOnce() -> T) -> (T, u64) {
    let t0 = clock.now_ns();
    let out = op();
    (out, clock.now_ns() - t0)
}

/// Box-plot statistics of one sample set, in nanoseconds.
///
/// Quartiles interpolate linearly between order statistics. Whiskers reach
/// the most extreme samples within 1.5 IQR of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingSummary {
    pub n: u64,
    #[serde(rename = "mean_ns")]
    pub mean: f64,
    #[serde(rename = "min_ns")]
    pub min: f64,
    #[serde(rename = "q1_ns")]
    pub q1: f64,
    #[serde(rename = "median_ns")]
    pub median: f64,
    #[serde(rename = "q3_ns")]
    pub q3: f64,
    #[serde(rename = "whisker_lo_ns")]
    pub whisker_low: f64,
    #[serde(rename = "whisker_hi_ns")]
    pub whisker_high: f64,
    #[serde(rename = "max_ns")]
    pub max: f64,
}

fn quantile(sorted: &[u64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let a = sorted[lo] as f64;
    match sorted.get(lo + 1) {
        Some(&b) if frac > 0.0 => a + frac * (b as f64 - a),
        _ => a,
    }
}

pub fn summarize(samples: &[u64]) -> Result<TimingSummary, ProfileError> {
    if samples.is_empty() {
        return Err(ProfileError::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let sum: u128 = sorted.iter().map(|&x| x as u128).sum();
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let whisker_low = sorted
        .iter()
        .map(|&x| x as f64)
        .find(|&x| x >= lo_fence)
        .map_or(q1, |x| x.min(q1));
    let whisker_high = sorted
        .iter()
        .rev()
        .map(|&x| x as f64)
        .find(|&x| x <= hi_fence)
        .map_or(q3, |x| x.max(q3));
    Ok(TimingSummary {
        n: n as u64,
        mean: sum as f64 / n as f64,
        min: sorted[0] as f64,
        q1,
        median: quantile(&sorted, 0.5),
        q3,
        whisker_low,
        whisker_high,
        max: sorted[n - 1] as f64,
    })
}

/// Stage durations of one completed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimingSample {
    pub step: u64,
    pub stages: StageTimings,
    /// Clock time from the start of `decide` to the end of `train`.
    pub wall_ns: u64,
}

impl TimingSample {
    pub fn total(&self) -> u64 {
        self.stages.total()
    }
}

/// One step of the control loop, as written to the step log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub rss_dbm: f64,
    pub action: McsIndex,
    pub fsr: f64,
    pub reward: f64,
    pub timing: TimingSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummaries {
    pub decide: TimingSummary,
    pub train: TimingSummary,
    pub set_action: TimingSummary,
    pub reward_wait: TimingSummary,
    pub get_reward: TimingSummary,
    pub get_state: TimingSummary,
}

impl StageSummaries {
    pub fn as_array(&self) -> [&TimingSummary; 6] {
        [
            &self.decide,
            &self.train,
            &self.set_action,
            &self.reward_wait,
            &self.get_reward,
            &self.get_state,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: BTreeMap<String, String>,
    pub valid: bool,
    pub error: Option<String>,
    pub steps_completed: u64,
    pub stages: Option<StageSummaries>,
    pub totals: Option<TimingSummary>,
    pub environment_mean_ns: Option<f64>,
    pub agent_mean_ns: Option<f64>,
}

impl RunReport {
    pub fn from_samples(config: &RunConfig, samples: &[TimingSample], error: Option<String>) -> Self {
        let column = |i: usize| -> Vec<u64> { samples.iter().map(|s| s.stages.as_array()[i]).collect() };
        let stages = (!samples.is_empty()).then(|| {
            let s = |i| summarize(&column(i)).expect("non-empty");
            StageSummaries {
                decide: s(0),
                train: s(1),
                set_action: s(2),
                reward_wait: s(3),
                get_reward: s(4),
                get_state: s(5),
            }
        });
        let totals: Vec<u64> = samples.iter().map(TimingSample::total).collect();
        let mean = |f: fn(&StageTimings) -> u64| {
            let sum: u128 = samples.iter().map(|s| f(&s.stages) as u128).sum();
            sum as f64 / samples.len() as f64
        };
        let any = !samples.is_empty();
        RunReport {
            config: config.to_pairs().into_iter().collect(),
            valid: error.is_none(),
            error,
            steps_completed: samples.len() as u64,
            stages,
            totals: summarize(&totals).ok(),
            environment_mean_ns: any.then(|| mean(StageTimings::environment)),
            agent_mean_ns: any.then(|| mean(StageTimings::agent)),
        }
    }
}

fn build_agent(config: &RunConfig) -> Result<Agent, ProfileError> {
    let mut agent = match &config.agent_checkpoint {
        Some(path) => load_agent(path)?,
        None => Agent::new(&config.agent, config.seed)?,
    };
    // The configured kind decides whether a loaded network keeps learning.
    agent.set_training(config.agent.kind.is_training());
    Ok(agent)
}

/// Sets up link, environment, and agent for `config` and returns them with
/// a fresh clock.
pub fn setup(config: &RunConfig) -> Result<(SimClock, Environment, Agent), ProfileError> {
    let link = Link::new(config.link.clone(), config.trace.clone(), config.seed)
        .map_err(|e| ProfileError::Setup(e.to_string()))?;
    let mut env = Environment::new(config.backend.clone(), config.env.clone(), link, config.seed)?;
    env.link_mut().set_mcs(config.initial_mcs);
    Ok((SimClock::new(config.clock), env, build_agent(config)?))
}

/// Runs the control loop: read the state once, then per step decide,
/// deploy and observe through the environment, and train.
///
/// `instrument = false` skips the per-stage clock reads around `decide` and
/// `train`; only `wall_ns` is measured then. A runtime error stops the loop
/// and is returned next to the steps that completed.
pub fn run_loop(
    config: &RunConfig,
    instrument: bool,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<(Vec<TimingSample>, Option<ProfileError>), ProfileError> {
    let (clock, mut env, mut agent) = setup(config)?;
    let mut samples = Vec::with_capacity(config.steps.min(1 << 20) as usize);
    let mut obs = match env.get_state(&clock) {
        Ok(o) => o,
        Err(e) => return Ok((samples, Some(e.into()))),
    };
    for step in 0..config.steps {
        let state = discretize_rss(obs);
        let start = clock.now_ns();
        let (action, decide_ns) = if instrument {
            time_stage(&clock, || agent.decide(state))
        } else {
            (agent.decide(state), 0)
        };
        let env_step = match env.step(action, &clock) {
            Ok(s) => s,
            Err(e) => return Ok((samples, Some(e.into()))),
        };
        let next_state = discretize_rss(env_step.observation);
        let train_ns = if agent.is_training() {
            let t = Transition { state, action, reward: env_step.reward, next_state };
            let (res, ns) = if instrument {
                time_stage(&clock, || agent.train(t))
            } else {
                (agent.train(t), 0)
            };
            if let Err(e) = res {
                return Ok((samples, Some(e.into())));
            }
            ns
        } else {
            0
        };
        let wall_ns = clock.now_ns() - start;
        let timing = TimingSample {
            step,
            stages: StageTimings { decide: decide_ns, train: train_ns, ..env_step.timings },
            wall_ns,
        };
        on_step(&StepRecord {
            step,
            rss_dbm: obs.rss_dbm(),
            action,
            fsr: env_step.fsr,
            reward: env_step.reward.value(),
            timing,
        });
        samples.push(timing);
        obs = env_step.observation;
    }
    if let Some(path) = &config.agent_save {
        save_agent(&agent, config.seed, path)?;
    }
    Ok((samples, None))
}

/// Profiles `config` and summarizes every stage. Runtime errors yield a
/// report with `valid = false` covering the completed steps.
pub fn run_profile(config: &RunConfig) -> Result<RunReport, ProfileError> {
    let (samples, error) = run_loop(config, true, |_| {})?;
    Ok(RunReport::from_samples(config, &samples, error.map(|e| e.to_string())))
}

const CSV_HEADER: &str =
    "stage,n,mean_ns,min_ns,q1_ns,median_ns,q3_ns,whisker_lo_ns,whisker_hi_ns,max_ns\n";

fn csv_row(out: &mut String, name: &str, s: &TimingSummary) {
    let _ = writeln!(
        out,
        "{name},{},{},{},{},{},{},{},{},{}",
        s.n, s.mean, s.min, s.q1, s.median, s.q3, s.whisker_low, s.whisker_high, s.max
    );
}

fn ms(ns: f64) -> f64 {
    ns / 1e6
}

/// Renders `report` in `format`. The CSV holds one row per stage followed
/// by a `total` row.
pub fn export_report(report: &RunReport, format: OutputFormat) -> Result<String, ProfileError> {
    let (stages, totals) = match (&report.stages, &report.totals) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(ProfileError::EmptyInput),
    };
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            for (name, s) in StageTimings::NAMES.iter().zip(stages.as_array()) {
                csv_row(&mut out, name, s);
            }
            csv_row(&mut out, "total", totals);
        }
        OutputFormat::Json => {
            out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
        }
        OutputFormat::Table => {
            let _ = writeln!(out, "steps: {}  valid: {}", report.steps_completed, report.valid);
            if let Some(e) = &report.error {
                let _ = writeln!(out, "error: {e}");
            }
            let _ = writeln!(
                out,
                "{:<12} {:>12} {:>12} {:>12} {:>12}",
                "stage", "mean_ms", "median_ms", "min_ms", "max_ms"
            );
            let rows = StageTimings::NAMES.iter().zip(stages.as_array());
            for (name, s) in rows.chain(std::iter::once((&"total", totals))) {
                let _ = writeln!(
                    out,
                    "{:<12} {:>12.3} {:>12.3} {:>12.3} {:>12.3}",
                    name,
                    ms(s.mean),
                    ms(s.median),
                    ms(s.min),
                    ms(s.max)
                );
            }
            let _ = writeln!(
                out,
                "environment {:>12.3}\nagent       {:>12.3}",
                ms(report.environment_mean_ns.unwrap_or(0.0)),
                ms(report.agent_mean_ns.unwrap_or(0.0))
            );
        }
    }
    Ok(out)
}
