//! Precompiled regular expressions. Compilation happens once per parser.

use regex::Regex;

use super::{checked_stats, ParseError};
use crate::domain::FrameStats;

const STATE_PATTERN: &str = r"\A[^\n]*\n[^\n]*\n[ \t]*[^ \t\n:]+:[ \t]*[^ \t\n]+[ \t]+[^ \t\n]+[ \t]+(-?[0-9]{1,4})\.?(?:[ \t\n]|\z)";
const REWARD_PATTERN: &str = r"\A([0-9]{1,20}),([0-9]{1,20})\n?\z";

pub(super) fn state_regex() -> Regex {
    Regex::new(STATE_PATTERN).expect("state pattern compiles")
}

pub(super) fn reward_regex() -> Regex {
    Regex::new(REWARD_PATTERN).expect("reward pattern compiles")
}

pub(super) fn parse_state(re: &Regex, text: &str) -> Result<i32, ParseError> {
    let caps = re
        .captures(text)
        .ok_or_else(|| ParseError::failure("no interface row with a numeric level"))?;
    caps[1]
        .parse::<i32>()
        .map_err(|e| ParseError::failure(format!("level: {e}")))
}

pub(super) fn parse_reward(re: &Regex, text: &str) -> Result<FrameStats, ParseError> {
    let caps = re
        .captures(text)
        .ok_or_else(|| ParseError::failure("expected `<successes>,<attempts>`"))?;
    let field = |i: usize| {
        caps[i]
            .parse::<u64>()
            .map_err(|e| ParseError::failure(format!("counter: {e}")))
    };
    checked_stats(field(1)?, field(2)?)
}
