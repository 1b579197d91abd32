//! RSS and frame-counter extraction from the two stat-file formats.
//!
//! Three strategies implement the same grammar (see `docs/fixture-grammar.md`):
//!
//! * [`ParserStrategy::Scan`]: a single forward pass over the bytes.
//! * [`ParserStrategy::Pattern`]: a precompiled regular expression.
//! * [`ParserStrategy::Split`]: line and field tokenization with `str` helpers.
//!
//! They must agree on every accepted value and on every rejection.

mod bench;
mod fixture;
mod pattern;
mod scan;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::FrameStats;

pub use bench::{bench_parsers, DEFAULT_CALLS, DEFAULT_REPEATS, BenchCorpus, BenchEntry, ParseBenchReport, Scenario};
pub use fixture::{
    fuzz_reward_corpus, fuzz_state_corpus, render_reward_file, render_state_file,
    render_state_rows, StateRow, REWARD_FILE_NAME, STATE_FILE_NAME, STATE_HEADER,
};

/// Level values are limited to four digits.
pub(crate) const MAX_LEVEL_DIGITS: usize = 4;
/// Counters are limited to twenty digits and must also fit in `u64`.
pub(crate) const MAX_COUNTER_DIGITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParserStrategy {
    Scan,
    Pattern,
    Split,
}

impl ParserStrategy {
    pub const ALL: [ParserStrategy; 3] =
        [ParserStrategy::Scan, ParserStrategy::Pattern, ParserStrategy::Split];

    pub fn name(self) -> &'static str {
        match self {
            ParserStrategy::Scan => "scan",
            ParserStrategy::Pattern => "pattern",
            ParserStrategy::Split => "split",
        }
    }
}

impl fmt::Display for ParserStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParserStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scan" => Ok(ParserStrategy::Scan),
            "pattern" => Ok(ParserStrategy::Pattern),
            "split" => Ok(ParserStrategy::Split),
            other => Err(format!("unknown parser strategy `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("parse failure: {reason}")]
    ParseFailure { reason: String },
    #[error("successes {successes} exceed attempts {attempts}")]
    InvariantViolation { successes: u64, attempts: u64 },
}

impl ParseError {
    pub(crate) fn failure(reason: impl Into<String>) -> Self {
        ParseError::ParseFailure { reason: reason.into() }
    }

    /// Error category without the free-text reason, for cross-strategy comparison.
    pub fn kind(&self) -> ParseErrorKind {
        match self {
            ParseError::ParseFailure { .. } => ParseErrorKind::ParseFailure,
            ParseError::InvariantViolation { .. } => ParseErrorKind::InvariantViolation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    ParseFailure,
    InvariantViolation,
}

pub(crate) fn checked_stats(successes: u64, attempts: u64) -> Result<FrameStats, ParseError> {
    if successes > attempts {
        Err(ParseError::InvariantViolation { successes, attempts })
    } else {
        Ok(FrameStats::new(successes, attempts))
    }
}

/// State-file parser with its one-time setup already done.
#[derive(Debug, Clone)]
pub struct StateParser {
    strategy: ParserStrategy,
    pattern: Option<regex::Regex>,
}

impl StateParser {
    pub fn new(strategy: ParserStrategy) -> Self {
        let pattern = (strategy == ParserStrategy::Pattern).then(pattern::state_regex);
        StateParser { strategy, pattern }
    }

    pub fn strategy(&self) -> ParserStrategy {
        self.strategy
    }

    /// Level (dBm) of the first interface row.
    pub fn parse(&self, text: &str) -> Result<i32, ParseError> {
        match (&self.pattern, self.strategy) {
            (Some(re), _) => pattern::parse_state(re, text),
            (None, ParserStrategy::Scan) => scan::parse_state(text),
            (None, _) => split::parse_state(text),
        }
    }
}

/// Reward-file parser with its one-time setup already done.
#[derive(Debug, Clone)]
pub struct RewardParser {
    strategy: ParserStrategy,
    pattern: Option<regex::Regex>,
}

impl RewardParser {
    pub fn new(strategy: ParserStrategy) -> Self {
        let pattern = (strategy == ParserStrategy::Pattern).then(pattern::reward_regex);
        RewardParser { strategy, pattern }
    }

    pub fn strategy(&self) -> ParserStrategy {
        self.strategy
    }

    pub fn parse(&self, text: &str) -> Result<FrameStats, ParseError> {
        match (&self.pattern, self.strategy) {
            (Some(re), _) => pattern::parse_reward(re, text),
            (None, ParserStrategy::Scan) => scan::parse_reward(text),
            (None, _) => split::parse_reward(text),
        }
    }
}

/// One-shot state parse. Builds the parser on every call; hold a
/// [`StateParser`] instead when parsing repeatedly.
pub fn parse_state(text: &str, strategy: ParserStrategy) -> Result<i32, ParseError> {
    StateParser::new(strategy).parse(text)
}

/// One-shot reward parse.
pub fn parse_reward(text: &str, strategy: ParserStrategy) -> Result<FrameStats, ParseError> {
    RewardParser::new(strategy).parse(text)
}
