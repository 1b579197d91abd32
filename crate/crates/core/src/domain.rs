//! Domain types shared by every other module: the 802.11n MCS action space,
//! RSS observations, frame counters, and the reward mathematics.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest RSS the state grid represents, in dBm.
pub const RSS_MIN_DBM: i32 = -95;
/// Highest RSS the state grid represents, in dBm.
pub const RSS_MAX_DBM: i32 = -20;
/// Number of 1 dBm bins in `[RSS_MIN_DBM, RSS_MAX_DBM]`.
pub const STATE_BINS: usize = (RSS_MAX_DBM - RSS_MIN_DBM + 1) as usize;
/// Number of single-stream 802.11n MCS rates.
pub const MCS_COUNT: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("no frame attempts in the observation window")]
    ZeroAttempts,
    #[error("frame counters went backwards ({before:?} -> {after:?})")]
    CounterRegression { before: FrameStats, after: FrameStats },
    #[error("value {value} outside [0, 1]")]
    OutOfDomain { value: f64 },
    #[error("mcs index {0} outside [0, 7]")]
    InvalidMcs(i64),
}

/// Index into the 802.11n single-stream MCS table (20 MHz, 800 ns GI).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct McsIndex(u8);

impl McsIndex {
    pub const MIN: McsIndex = McsIndex(0);
    pub const MAX: McsIndex = McsIndex(7);

    pub fn new(value: u8) -> Result<Self, DomainError> {
        if (value as usize) < MCS_COUNT {
            Ok(McsIndex(value))
        } else {
            Err(DomainError::InvalidMcs(value as i64))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// All eight indices in rate order.
    pub fn all() -> impl Iterator<Item = McsIndex> + Clone {
        (0..MCS_COUNT as u8).map(McsIndex)
    }
}

impl TryFrom<u8> for McsIndex {
    type Error = DomainError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        McsIndex::new(value)
    }
}

impl From<McsIndex> for u8 {
    fn from(m: McsIndex) -> u8 {
        m.0
    }
}

impl fmt::Display for McsIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Theoretical throughputs of the action space in Mbit/s.
pub struct McsTable;

impl McsTable {
    pub const RATES_MBPS: [f64; MCS_COUNT] = [6.5, 13.0, 19.5, 26.0, 39.0, 52.0, 58.5, 65.0];
    pub const MAX_RATE_MBPS: f64 = 65.0;
}

pub fn theoretical_rate(mcs: McsIndex) -> f64 {
    McsTable::RATES_MBPS[mcs.as_usize()]
}

/// RSS reading in dBm, clamped to the grid range when constructed.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LinkObservation {
    rss_dbm: f64,
}

impl LinkObservation {
    /// Clamps to `[-95, -20]`. A NaN reading is treated as the floor of the range.
    pub fn new(rss_dbm: f64) -> Self {
        let rss_dbm = if rss_dbm.is_nan() {
            RSS_MIN_DBM as f64
        } else {
            rss_dbm.clamp(RSS_MIN_DBM as f64, RSS_MAX_DBM as f64)
        };
        LinkObservation { rss_dbm }
    }

    pub fn rss_dbm(self) -> f64 {
        self.rss_dbm
    }
}

/// Cumulative frame transmission counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameStats {
    pub successes: u64,
    pub attempts: u64,
}

impl FrameStats {
    pub fn new(successes: u64, attempts: u64) -> Self {
        debug_assert!(successes <= attempts);
        FrameStats { successes, attempts }
    }

    pub fn accumulate(&mut self, delta: FrameStats) {
        self.successes += delta.successes;
        self.attempts += delta.attempts;
    }
}

/// Output of the reward function, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct RewardValue(f64);

impl RewardValue {
    pub fn new(value: f64) -> Result<Self, DomainError> {
        if (0.0..=1.0).contains(&value) {
            Ok(RewardValue(value))
        } else {
            Err(DomainError::OutOfDomain { value })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Discrete RL state: one 1 dBm bin of the RSS grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateBin(i32);

impl StateBin {
    pub fn from_dbm(dbm: i32) -> Option<Self> {
        (RSS_MIN_DBM..=RSS_MAX_DBM).contains(&dbm).then_some(StateBin(dbm))
    }

    pub fn dbm(self) -> i32 {
        self.0
    }

    /// Zero-based position in the grid, `0` for -95 dBm.
    pub fn index(self) -> usize {
        (self.0 - RSS_MIN_DBM) as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < STATE_BINS).then(|| StateBin(RSS_MIN_DBM + index as i32))
    }

    pub fn all() -> impl Iterator<Item = StateBin> + Clone {
        (RSS_MIN_DBM..=RSS_MAX_DBM).map(StateBin)
    }
}

impl fmt::Display for StateBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: StateBin,
    pub action: McsIndex,
    pub reward: RewardValue,
    pub next_state: StateBin,
}

/// Frame success rate over the window between two counter snapshots.
pub fn compute_fsr(before: FrameStats, after: FrameStats) -> Result<f64, DomainError> {
    if after.attempts < before.attempts || after.successes < before.successes {
        return Err(DomainError::CounterRegression { before, after });
    }
    let attempts = after.attempts - before.attempts;
    let successes = after.successes - before.successes;
    if attempts == 0 {
        return Err(DomainError::ZeroAttempts);
    }
    if successes > attempts {
        // Only reachable if a snapshot itself violated successes <= attempts.
        return Err(DomainError::CounterRegression { before, after });
    }
    Ok(successes as f64 / attempts as f64)
}

/// `fsr * rate(mcs) / max_rate`.
pub fn compute_reward(fsr: f64, mcs: McsIndex) -> Result<RewardValue, DomainError> {
    if !(0.0..=1.0).contains(&fsr) {
        return Err(DomainError::OutOfDomain { value: fsr });
    }
    let reward = fsr * theoretical_rate(mcs) / McsTable::MAX_RATE_MBPS;
    // The product can round a hair above 1 only when fsr = 1 and mcs = 7, where it is exact.
    RewardValue::new(reward.min(1.0))
}

/// Floors to integer dBm and clamps into the grid.
pub fn discretize_rss(obs: LinkObservation) -> StateBin {
    let dbm = obs.rss_dbm().floor() as i32;
    StateBin(dbm.clamp(RSS_MIN_DBM, RSS_MAX_DBM))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mcs(v: u8) -> McsIndex {
        McsIndex::new(v).unwrap()
    }

    #[test]
    fn rate_table_entries() {
        assert_eq!(theoretical_rate(mcs(0)), 6.5);
        assert_eq!(theoretical_rate(mcs(7)), 65.0);
        assert_eq!(theoretical_rate(mcs(4)), 39.0);
        assert!(McsTable::RATES_MBPS.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(McsTable::RATES_MBPS[7], McsTable::MAX_RATE_MBPS);
    }

    #[test]
    fn mcs_rejects_out_of_range() {
        assert_eq!(McsIndex::new(8), Err(DomainError::InvalidMcs(8)));
        assert!(McsIndex::new(7).is_ok());
    }

    #[test]
    fn fsr_examples() {
        let fsr = compute_fsr(FrameStats::new(100, 120), FrameStats::new(150, 180)).unwrap();
        assert_eq!(fsr, 50.0 / 60.0);
        assert_eq!(
            compute_fsr(FrameStats::default(), FrameStats::default()),
            Err(DomainError::ZeroAttempts)
        );
        assert_eq!(compute_fsr(FrameStats::new(10, 10), FrameStats::new(10, 20)), Ok(0.0));
    }

    #[test]
    fn fsr_counter_regression() {
        let err = compute_fsr(FrameStats::new(10, 20), FrameStats::new(5, 30)).unwrap_err();
        assert!(matches!(err, DomainError::CounterRegression { .. }));
        let err = compute_fsr(FrameStats::new(10, 20), FrameStats::new(10, 19)).unwrap_err();
        assert!(matches!(err, DomainError::CounterRegression { .. }));
    }

    #[test]
    fn reward_examples() {
        assert_eq!(compute_reward(1.0, mcs(7)).unwrap().value(), 1.0);
        assert!((compute_reward(0.5, mcs(1)).unwrap().value() - 0.1).abs() < 1e-15);
        assert_eq!(compute_reward(0.0, mcs(3)).unwrap().value(), 0.0);
        assert!(matches!(compute_reward(1.01, mcs(3)), Err(DomainError::OutOfDomain { .. })));
        assert!(matches!(compute_reward(-0.1, mcs(3)), Err(DomainError::OutOfDomain { .. })));
        assert!(compute_reward(f64::NAN, mcs(3)).is_err());
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize_rss(LinkObservation::new(-55.4)).dbm(), -56);
        assert_eq!(discretize_rss(LinkObservation::new(-120.0)).dbm(), -95);
        assert_eq!(discretize_rss(LinkObservation::new(-20.0)).dbm(), -20);
        assert_eq!(discretize_rss(LinkObservation::new(0.0)).dbm(), -20);
        assert_eq!(StateBin::all().count(), 76);
    }

    #[test]
    fn observation_clamps() {
        assert_eq!(LinkObservation::new(-200.0).rss_dbm(), -95.0);
        assert_eq!(LinkObservation::new(5.0).rss_dbm(), -20.0);
        assert_eq!(LinkObservation::new(f64::NAN).rss_dbm(), -95.0);
    }

    #[test]
    fn bin_index_round_trip() {
        for bin in StateBin::all() {
            assert_eq!(StateBin::from_index(bin.index()), Some(bin));
        }
        assert_eq!(StateBin::from_index(STATE_BINS), None);
    }

    proptest! {
        #[test]
        fn reward_in_unit_interval(fsr in 0.0f64..=1.0, m in 0u8..8) {
            let r = compute_reward(fsr, mcs(m)).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert_eq!(r == 1.0, fsr == 1.0 && m == 7);
        }

        #[test]
        fn reward_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, m in 0u8..7) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(compute_reward(lo, mcs(m)).unwrap() <= compute_reward(hi, mcs(m)).unwrap());
            prop_assert!(compute_reward(a, mcs(m)).unwrap() <= compute_reward(a, mcs(m + 1)).unwrap());
        }

        #[test]
        fn fsr_window_composition(
            s1 in 0u64..500, f1 in 1u64..500, s2 in 0u64..500, f2 in 1u64..500,
        ) {
            let a = FrameStats::new(0, 0);
            let b = FrameStats::new(s1.min(f1), f1);
            let c = FrameStats::new(b.successes + s2.min(f2), f1 + f2);
            let whole = compute_fsr(a, c).unwrap();
            let first = compute_fsr(a, b).unwrap();
            let second = compute_fsr(b, c).unwrap();
            let weighted = (first * f1 as f64 + second * f2 as f64) / (f1 + f2) as f64;
            prop_assert!((whole - weighted).abs() < 1e-12);
        }

        #[test]
        fn discretize_stays_on_grid(rss in -500.0f64..500.0) {
            let bin = discretize_rss(LinkObservation::new(rss));
            prop_assert!(StateBin::from_dbm(bin.dbm()).is_some());
            let center = LinkObservation::new(bin.dbm() as f64);
            prop_assert_eq!(discretize_rss(center), bin);
        }
    }
}
