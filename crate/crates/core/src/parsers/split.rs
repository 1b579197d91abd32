//! Line and field tokenization.

use super::{checked_stats, ParseError, MAX_COUNTER_DIGITS, MAX_LEVEL_DIGITS};
use crate::domain::FrameStats;

const BLANKS: [char; 2] = [' ', '\t'];

pub(super) fn parse_state(text: &str) -> Result<i32, ParseError> {
    let mut lines = text.split('\n');
    let row = match (lines.next(), lines.next(), lines.next()) {
        (Some(_), Some(_), Some(row)) => row,
        _ => return Err(ParseError::failure("missing interface row")),
    };
    let (name, fields) = row
        .split_once(':')
        .ok_or_else(|| ParseError::failure("interface row has no ':'"))?;
    let name = name.trim_start_matches(BLANKS);
    if name.is_empty() || name.contains(BLANKS) {
        return Err(ParseError::failure("bad interface name"));
    }
    let level = fields
        .split(BLANKS)
        .filter(|f| !f.is_empty())
        .nth(2)
        .ok_or_else(|| ParseError::failure("missing level field"))?;
    let magnitude = level.strip_prefix('-').unwrap_or(level);
    let digits = magnitude.strip_suffix('.').unwrap_or(magnitude);
    if digits.is_empty()
        || digits.len() > MAX_LEVEL_DIGITS
        || !digits.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(ParseError::failure("non-numeric level"));
    }
    let value: i32 = digits
        .parse()
        .map_err(|e| ParseError::failure(format!("level: {e}")))?;
    Ok(if magnitude.len() == level.len() { value } else { -value })
}

pub(super) fn parse_reward(text: &str) -> Result<FrameStats, ParseError> {
    let line = text.strip_suffix('\n').unwrap_or(text);
    let (a, b) = line
        .split_once(',')
        .ok_or_else(|| ParseError::failure("expected ','"))?;
    checked_stats(counter(a)?, counter(b)?)
}

fn counter(field: &str) -> Result<u64, ParseError> {
    if field.is_empty()
        || field.len() > MAX_COUNTER_DIGITS
        || !field.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(ParseError::failure(format!("bad counter {field:?}")));
    }
    field
        .parse()
        .map_err(|e| ParseError::failure(format!("counter: {e}")))
}
