//! Fixture rendering and the seeded fuzz corpus generator.

use std::fmt::Write;

use rand::RngCore;

use crate::domain::{discretize_rss, FrameStats, LinkObservation};
use crate::rng::{self, Stream};

pub const STATE_FILE_NAME: &str = "wireless";
pub const REWARD_FILE_NAME: &str = "frame_stats";

/// The two header lines of the state table, newline-terminated.
pub const STATE_HEADER: &str = "Inter-| sta-|   Quality        |   Discarded packets               | Missed | WE\n face | tus | link level noise |  nwid  crypt   frag  retry   misc | beacon | 22\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateRow {
    pub interface: String,
    pub level_dbm: i32,
}

impl StateRow {
    pub fn new(interface: &str, level_dbm: i32) -> Self {
        StateRow { interface: interface.to_string(), level_dbm }
    }
}

/// State table with one `wlan0` row whose level is `floor(obs)`. The other
/// columns are filled from `decor`.
pub fn render_state_file(obs: LinkObservation, decor: &mut impl RngCore) -> String {
    render_state_rows(&[StateRow::new("wlan0", discretize_rss(obs).dbm())], decor)
}

pub fn render_state_rows(rows: &[StateRow], decor: &mut impl RngCore) -> String {
    let mut out = String::with_capacity(STATE_HEADER.len() + rows.len() * 80);
    out.push_str(STATE_HEADER);
    for row in rows {
        let status = rng::below(decor, 0x1_0000);
        let link = rng::below(decor, 71);
        let noise = -80 - rng::below(decor, 31) as i64;
        let mut counters = [0u64; 6];
        for c in counters.iter_mut() {
            *c = rng::below(decor, 1_000_000);
        }
        let [nwid, crypt, frag, retry, misc, beacon] = counters;
        writeln!(
            out,
            "{:>6}: {:04x}  {:>3}.  {:>3}.  {:>3}.  {:>6} {:>6} {:>6} {:>6} {:>6}   {:>6}",
            row.interface, status, link, row.level_dbm, noise, nwid, crypt, frag, retry, misc, beacon
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// `<successes>,<attempts>\n`.
pub fn render_reward_file(stats: FrameStats) -> String {
    format!("{},{}\n", stats.successes, stats.attempts)
}

const INTERFACES: [&str; 4] = ["wlan0", "wlp2s0", "wlx00c0ca9a1b2c", "mon0"];
const MUTATION_ALPHABET: &[char] = &[
    '0', '1', '5', '9', '-', '.', ':', ',', ' ', '\t', '\n', '\r', 'a', 'w', '|', '+', 'é',
];

fn pick<'a, T>(rng: &mut impl RngCore, items: &'a [T]) -> &'a T {
    &items[rng::below(rng, items.len() as u64) as usize]
}

/// Applies one to three random edits (delete, insert, replace, truncate,
/// duplicate a span) at character boundaries.
fn mutate(text: &str, rng: &mut impl RngCore) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let edits = 1 + rng::below(rng, 3);
    for _ in 0..edits {
        let len = chars.len() as u64;
        let at = rng::below(rng, len + 1) as usize;
        match rng::below(rng, 5) {
            0 if at < chars.len() => {
                chars.remove(at);
            }
            1 => chars.insert(at, *pick(rng, MUTATION_ALPHABET)),
            2 if at < chars.len() => chars[at] = *pick(rng, MUTATION_ALPHABET),
            3 => chars.truncate(at),
            4 if at < chars.len() => {
                let end = (at + 1 + rng::below(rng, 8) as usize).min(chars.len());
                let span: Vec<char> = chars[at..end].to_vec();
                chars.splice(at..at, span);
            }
            _ => chars.insert(at, *pick(rng, MUTATION_ALPHABET)),
        }
    }
    chars.into_iter().collect()
}

/// `n` state-table inputs: about half valid fixtures (one to three rows,
/// random RSS) and half mutated ones. Deterministic in `seed`.
pub fn fuzz_state_corpus(seed: u64, n: usize) -> Vec<String> {
    let mut rng = rng::stream(seed, Stream::Fuzz);
    (0..n)
        .map(|_| {
            let rows: Vec<StateRow> = (0..1 + rng::below(&mut rng, 3))
                .map(|_| {
                    let rss = -95.0 + 75.0 * rng::unit_f64(&mut rng);
                    let level = discretize_rss(LinkObservation::new(rss)).dbm();
                    StateRow::new(pick(&mut rng, &INTERFACES), level)
                })
                .collect();
            let valid = render_state_rows(&rows, &mut rng);
            if rng::below(&mut rng, 2) == 0 {
                valid
            } else {
                mutate(&valid, &mut rng)
            }
        })
        .collect()
}

/// `n` reward-file inputs: valid pairs, pairs with successes > attempts,
/// counters near the `u64` limit, and mutated text. Deterministic in `seed`.
pub fn fuzz_reward_corpus(seed: u64, n: usize) -> Vec<String> {
    let mut rng = rng::stream(seed ^ 0x5eed, Stream::Fuzz);
    (0..n)
        .map(|_| {
            let attempts = match rng::below(&mut rng, 4) {
                0 => rng::below(&mut rng, 100),
                1 => rng::below(&mut rng, 1_000_000),
                2 => u64::MAX - rng::below(&mut rng, 10),
                _ => rng.next_u64(),
            };
            let successes = rng::below(&mut rng, attempts.saturating_add(1));
            let newline = if rng::below(&mut rng, 4) == 0 { "" } else { "\n" };
            match rng::below(&mut rng, 6) {
                0 => format!("{attempts},{successes}{newline}"),
                1 | 2 => format!("{successes},{attempts}{newline}"),
                _ => mutate(&format!("{successes},{attempts}{newline}"), &mut rng),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsers::{parse_state, ParserStrategy};

    #[test]
    fn level_field_has_trailing_period() {
        let text = render_state_file(LinkObservation::new(-56.0), &mut rng::stream(1, Stream::Decor));
        let row = text.lines().nth(2).unwrap();
        assert!(row.split_whitespace().nth(3) == Some("-56."), "{row}");
        assert_eq!(text.lines().count(), 3);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn render_is_deterministic_in_decor_seed() {
        let obs = LinkObservation::new(-70.3);
        let a = render_state_file(obs, &mut rng::stream(8, Stream::Decor));
        let b = render_state_file(obs, &mut rng::stream(8, Stream::Decor));
        let c = render_state_file(obs, &mut rng::stream(9, Stream::Decor));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn render_parse_round_trip_floors() {
        let mut r = rng::stream(21, Stream::Fuzz);
        let mut decor = rng::stream(21, Stream::Decor);
        for _ in 0..1000 {
            let x = -95.0 + 75.0 * rng::unit_f64(&mut r);
            let text = render_state_file(LinkObservation::new(x), &mut decor);
            for s in ParserStrategy::ALL {
                assert_eq!(parse_state(&text, s), Ok(x.floor() as i32));
            }
        }
    }

    #[test]
    fn reward_render() {
        assert_eq!(render_reward_file(FrameStats::new(150, 180)), "150,180\n");
    }

    #[test]
    fn corpora_are_seeded() {
        assert_eq!(fuzz_state_corpus(3, 50), fuzz_state_corpus(3, 50));
        assert_ne!(fuzz_state_corpus(3, 50), fuzz_state_corpus(4, 50));
        assert_eq!(fuzz_reward_corpus(3, 50), fuzz_reward_corpus(3, 50));
    }
}
