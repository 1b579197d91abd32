//! Single-pass byte scanner.

use super::{checked_stats, ParseError, MAX_COUNTER_DIGITS, MAX_LEVEL_DIGITS};
use crate::domain::FrameStats;

fn is_blank(b: u8) -> bool {
    b == b' ' || b == b'\t'
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_line(&mut self) -> bool {
        while let Some(b) = self.peek() {
            self.pos += 1;
            if b == b'\n' {
                return true;
            }
        }
        false
    }

    fn skip_blanks(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(is_blank) {
            self.pos += 1;
        }
        self.pos - start
    }

    /// Consumes a run of bytes that are neither blank nor newline.
    fn token(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.peek().is_some_and(|b| !is_blank(b) && b != b'\n') {
            self.pos += 1;
        }
        &self.bytes[start..self.pos]
    }
}

pub(super) fn parse_state(text: &str) -> Result<i32, ParseError> {
    let mut cur = Cursor { bytes: text.as_bytes(), pos: 0 };
    if !cur.skip_line() || !cur.skip_line() {
        return Err(ParseError::failure("missing header lines"));
    }
    cur.skip_blanks();

    let name_start = cur.pos;
    while cur.peek().is_some_and(|b| !is_blank(b) && b != b'\n' && b != b':') {
        cur.pos += 1;
    }
    if cur.pos == name_start {
        return Err(ParseError::failure("missing interface row"));
    }
    if cur.peek() != Some(b':') {
        return Err(ParseError::failure("interface name not followed by ':'"));
    }
    cur.pos += 1;

    cur.skip_blanks();
    if cur.token().is_empty() {
        return Err(ParseError::failure("missing status field"));
    }
    if cur.skip_blanks() == 0 || cur.token().is_empty() {
        return Err(ParseError::failure("missing link quality field"));
    }
    if cur.skip_blanks() == 0 {
        return Err(ParseError::failure("missing level field"));
    }
    parse_level(cur.token())
}

fn parse_level(token: &[u8]) -> Result<i32, ParseError> {
    let (negative, rest) = match token.split_first() {
        Some((b'-', rest)) => (true, rest),
        _ => (false, token),
    };
    let digits = rest.strip_suffix(b".").unwrap_or(rest);
    if digits.is_empty() || digits.len() > MAX_LEVEL_DIGITS {
        return Err(ParseError::failure("level is not a 1-4 digit integer"));
    }
    let mut value: i32 = 0;
    for &b in digits {
        if !b.is_ascii_digit() {
            return Err(ParseError::failure("non-numeric level"));
        }
        value = value * 10 + (b - b'0') as i32;
    }
    Ok(if negative { -value } else { value })
}

pub(super) fn parse_reward(text: &str) -> Result<FrameStats, ParseError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let successes = scan_counter(bytes, &mut pos)?;
    if bytes.get(pos) != Some(&b',') {
        return Err(ParseError::failure("expected ',' after successes"));
    }
    pos += 1;
    let attempts = scan_counter(bytes, &mut pos)?;
    match &bytes[pos..] {
        b"" | b"\n" => checked_stats(successes, attempts),
        _ => Err(ParseError::failure("trailing data after attempts")),
    }
}

fn scan_counter(bytes: &[u8], pos: &mut usize) -> Result<u64, ParseError> {
    let start = *pos;
    let mut value: u64 = 0;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        if *pos - start == MAX_COUNTER_DIGITS {
            return Err(ParseError::failure("counter has too many digits"));
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as u64))
            .ok_or_else(|| ParseError::failure("counter overflows u64"))?;
        *pos += 1;
    }
    if *pos == start {
        return Err(ParseError::failure("expected a decimal counter"));
    }
    Ok(value)
}
