//! Parser microbenchmark: `calls` invocations per repeat, fastest repeat wins.
//!
//! Parser construction (regex compilation) and corpus generation happen
//! before timing starts. Under a virtual clock each call is charged one
//! nanosecond per input byte, which keeps the report deterministic but says
//! nothing about real parser speed.

use std::fmt::{self, Write};
use std::hint::black_box;

use serde::Serialize;

use super::{fixture, ParserStrategy, RewardParser, StateParser};
use crate::clock::SimClock;
use crate::domain::{FrameStats, LinkObservation};
use crate::rng::{self, Stream};

pub const DEFAULT_CALLS: u64 = 10_000;
pub const DEFAULT_REPEATS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    State,
    Reward,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::State => "state",
            Scenario::Reward => "reward",
        })
    }
}

/// Valid inputs the benchmark cycles through.
#[derive(Debug, Clone)]
pub struct BenchCorpus {
    pub state: Vec<String>,
    pub reward: Vec<String>,
}

impl BenchCorpus {
    pub fn generate(seed: u64, size: usize) -> Self {
        let size = size.max(1);
        let mut r = rng::stream(seed, Stream::Fuzz);
        let mut decor = rng::stream(seed, Stream::Decor);
        let state = (0..size)
            .map(|_| {
                let rss = -95.0 + 75.0 * rng::unit_f64(&mut r);
                fixture::render_state_file(LinkObservation::new(rss), &mut decor)
            })
            .collect();
        let reward = (0..size)
            .map(|_| {
                let attempts = rng::below(&mut r, 10_000_000);
                let successes = rng::below(&mut r, attempts + 1);
                fixture::render_reward_file(FrameStats::new(successes, attempts))
            })
            .collect();
        BenchCorpus { state, reward }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchEntry {
    pub scenario: Scenario,
    pub strategy: ParserStrategy,
    pub avg_ns: f64,
    pub calls: u64,
    pub repeats: u64,
    #[serde(skip)]
    pub repeat_totals_ns: Vec<u64>,
}

impl BenchEntry {
    /// Average per call if only the first `k` repeats had been run.
    pub fn avg_ns_after(&self, k: usize) -> Option<f64> {
        let best = self.repeat_totals_ns.iter().take(k).min()?;
        Some(*best as f64 / self.calls as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseBenchReport {
    pub entries: Vec<BenchEntry>,
}

fn time_calls<F: FnMut(&str)>(
    clock: &SimClock,
    inputs: &[String],
    calls: u64,
    repeats: u64,
    mut call: F,
) -> Vec<u64> {
    (0..repeats)
        .map(|_| {
            let start = clock.now_ns();
            for i in 0..calls {
                let text = &inputs[(i % inputs.len() as u64) as usize];
                call(black_box(text));
                if clock.is_virtual() {
                    clock.wait(text.len() as u64);
                }
            }
            clock.now_ns() - start
        })
        .collect()
}

/// Runs every strategy on both scenarios. Benchmarks run serially.
///
/// Panics if `calls` or `repeats` is zero or the corpus is empty; callers
/// validate these first.
pub fn bench_parsers(corpus: &BenchCorpus, calls: u64, repeats: u64, clock: &SimClock) -> ParseBenchReport {
    assert!(calls >= 1 && repeats >= 1, "calls and repeats must be >= 1");
    assert!(!corpus.state.is_empty() && !corpus.reward.is_empty(), "empty corpus");
    let mut entries = Vec::with_capacity(6);
    for scenario in [Scenario::State, Scenario::Reward] {
        for strategy in ParserStrategy::ALL {
            let totals = match scenario {
                Scenario::State => {
                    let parser = StateParser::new(strategy);
                    time_calls(clock, &corpus.state, calls, repeats, |t| {
                        black_box(parser.parse(t).ok());
                    })
                }
                Scenario::Reward => {
                    let parser = RewardParser::new(strategy);
                    time_calls(clock, &corpus.reward, calls, repeats, |t| {
                        black_box(parser.parse(t).ok());
                    })
                }
            };
            let best = *totals.iter().min().expect("repeats >= 1");
            entries.push(BenchEntry {
                scenario,
                strategy,
                avg_ns: best as f64 / calls as f64,
                calls,
                repeats,
                repeat_totals_ns: totals,
            });
        }
    }
    ParseBenchReport { entries }
}

impl ParseBenchReport {
    pub fn entry(&self, scenario: Scenario, strategy: ParserStrategy) -> Option<&BenchEntry> {
        self.entries
            .iter()
            .find(|e| e.scenario == scenario && e.strategy == strategy)
    }

    /// `scenario,strategy,avg_ns,calls,repeats`.
    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    /// Scenario rows by strategy columns, averages in milliseconds.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22}|{:>12}|{:>12}|{:>12}",
            "Parsing", "Scan", "Pattern", "Split"
        );
        let _ = writeln!(out, "{}", "-".repeat(22 + 3 * 13));
        for scenario in [Scenario::State, Scenario::Reward] {
            let label = format!("{} average (ms)", capitalize(&scenario.to_string()));
            let _ = write!(out, "{label:<22}");
            for strategy in ParserStrategy::ALL {
                match self.entry(scenario, strategy) {
                    Some(e) => {
                        let _ = write!(out, "|{:>12.6}", e.avg_ns / 1e6);
                    }
                    None => {
                        let _ = write!(out, "|{:>12}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
