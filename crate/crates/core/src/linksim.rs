//! Deterministic simulated 802.11n link.
//!
//! Each MCS has a logistic frame-success curve over RSS, centered at a
//! per-MCS threshold. Frame attempts arrive at a fixed rate; successes are
//! binomial draws from the link's own rng stream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    theoretical_rate, FrameStats, LinkObservation, McsIndex, McsTable, MCS_COUNT, RSS_MAX_DBM,
    RSS_MIN_DBM,
};
use crate::rng::{self, SimRng, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("thresholds must be strictly increasing with MCS index")]
    ThresholdsNotIncreasing,
    #[error("steepness must be finite and > 0, got {0}")]
    Steepness(f64),
    #[error("attempts_rate must be finite and > 0, got {0}")]
    AttemptsRate(f64),
    #[error("invalid trace: {0}")]
    Trace(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// RSS (dBm) at which each MCS reaches 50% frame success.
    pub thresholds: [f64; MCS_COUNT],
    /// Logistic steepness in 1/dB.
    pub steepness: f64,
    /// Frame attempts per second.
    pub attempts_rate: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            thresholds: [-88.0, -85.0, -82.0, -79.0, -76.0, -72.0, -68.0, -64.0],
            steepness: 1.0,
            attempts_rate: 1000.0,
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !self.thresholds.iter().all(|t| t.is_finite())
            || !self.thresholds.windows(2).all(|w| w[0] < w[1])
        {
            return Err(LinkError::ThresholdsNotIncreasing);
        }
        if !(self.steepness.is_finite() && self.steepness > 0.0) {
            return Err(LinkError::Steepness(self.steepness));
        }
        if !(self.attempts_rate.is_finite() && self.attempts_rate > 0.0) {
            return Err(LinkError::AttemptsRate(self.attempts_rate));
        }
        Ok(())
    }
}

/// `1 / (1 + exp(k * (threshold[mcs] - rss)))`.
pub fn fsr_at(model: &LinkModel, mcs: McsIndex, rss_dbm: f64) -> f64 {
    let x = model.steepness * (model.thresholds[mcs.as_usize()] - rss_dbm);
    1.0 / (1.0 + x.exp())
}

/// Expected reward of transmitting at `mcs` with the given RSS.
pub fn expected_reward(model: &LinkModel, mcs: McsIndex, rss_dbm: f64) -> f64 {
    fsr_at(model, mcs, rss_dbm) * theoretical_rate(mcs) / McsTable::MAX_RATE_MBPS
}

/// Frame counter delta for a window of `duration_s` seconds at a fixed MCS and RSS.
pub fn generate_frames(
    model: &LinkModel,
    mcs: McsIndex,
    rss_dbm: f64,
    duration_s: f64,
    rng: &mut SimRng,
) -> FrameStats {
    let attempts = (model.attempts_rate * duration_s.max(0.0)).round() as u64;
    sample_window(model, mcs, rss_dbm, attempts, rng)
}

fn sample_window(
    model: &LinkModel,
    mcs: McsIndex,
    rss_dbm: f64,
    attempts: u64,
    rng: &mut SimRng,
) -> FrameStats {
    let p = fsr_at(model, mcs, rss_dbm);
    FrameStats::new(rng::binomial(rng, attempts, p), attempts)
}

/// Brute-force argmax of expected reward; ties go to the lower index.
pub fn oracle_best_mcs(model: &LinkModel, rss_dbm: f64) -> McsIndex {
    let mut best = McsIndex::MIN;
    let mut best_value = f64::NEG_INFINITY;
    for mcs in McsIndex::all() {
        let value = expected_reward(model, mcs, rss_dbm);
        if value > best_value {
            best = mcs;
            best_value = value;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceKind {
    Constant {
        level: f64,
    },
    /// Gaussian increments with standard deviation `step_std * sqrt(dt)` dB,
    /// clamped to `[min, max]`.
    RandomWalk {
        start: f64,
        step_std: f64,
        min: f64,
        max: f64,
    },
    /// Cycles through `levels`, holding each for `dwell_s` seconds.
    Step {
        levels: Vec<f64>,
        dwell_s: f64,
    },
}

impl TraceKind {
    pub fn validate(&self) -> Result<(), LinkError> {
        let finite = |v: f64| v.is_finite();
        match self {
            TraceKind::Constant { level } if !finite(*level) => {
                Err(LinkError::Trace("constant level must be finite".into()))
            }
            TraceKind::RandomWalk { start, step_std, min, max } => {
                if ![*start, *step_std, *min, *max].into_iter().all(finite) {
                    Err(LinkError::Trace("random walk parameters must be finite".into()))
                } else if *step_std < 0.0 {
                    Err(LinkError::Trace("step_std must be >= 0".into()))
                } else if min > max {
                    Err(LinkError::Trace("random walk min must be <= max".into()))
                } else {
                    Ok(())
                }
            }
            TraceKind::Step { levels, dwell_s } => {
                if levels.is_empty() || !levels.iter().copied().all(finite) {
                    Err(LinkError::Trace("step levels must be non-empty and finite".into()))
                } else if !(dwell_s.is_finite() && *dwell_s > 0.0) {
                    Err(LinkError::Trace("step dwell must be > 0".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn clamp_rss(v: f64) -> f64 {
    v.clamp(RSS_MIN_DBM as f64, RSS_MAX_DBM as f64)
}

/// Stateful RSS trajectory.
#[derive(Debug, Clone)]
pub struct RssTrace {
    kind: TraceKind,
    rng: SimRng,
    elapsed_s: f64,
    current: f64,
}

impl RssTrace {
    pub fn new(kind: TraceKind, seed: u64) -> Self {
        let current = match &kind {
            TraceKind::Constant { level } => *level,
            TraceKind::RandomWalk { start, min, max, .. } => start.clamp(*min, *max),
            TraceKind::Step { levels, .. } => levels[0],
        };
        RssTrace {
            kind,
            rng: rng::stream(seed, Stream::Trace),
            elapsed_s: 0.0,
            current: clamp_rss(current),
        }
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn kind(&self) -> &TraceKind {
        &self.kind
    }

    /// Moves the trace forward by `dt_s` seconds and returns the new RSS.
    pub fn advance(&mut self, dt_s: f64) -> f64 {
        let dt_s = dt_s.max(0.0);
        self.elapsed_s += dt_s;
        let next = match &self.kind {
            TraceKind::Constant { level } => *level,
            TraceKind::RandomWalk { step_std, min, max, .. } => {
                if dt_s > 0.0 {
                    let z = rng::gaussian(&mut self.rng);
                    (self.current + step_std * dt_s.sqrt() * z).clamp(*min, *max)
                } else {
                    self.current
                }
            }
            TraceKind::Step { levels, dwell_s } => {
                let slot = (self.elapsed_s / dwell_s).floor() as usize % levels.len();
                levels[slot]
            }
        };
        self.current = clamp_rss(next);
        self.current
    }
}

pub fn advance_trace(trace: &mut RssTrace, dt_s: f64) -> f64 {
    trace.advance(dt_s)
}

/// The simulated link: one station transmitting continuously while time passes.
///
/// Time is pushed forward with [`Link::advance_to`]; frames for each elapsed
/// interval use the MCS and RSS in effect at the start of that interval.
/// The cumulative attempt count is `floor(attempts_rate * t)`, so it does not
/// depend on how time is chunked.
#[derive(Debug, Clone)]
pub struct Link {
    model: LinkModel,
    trace: RssTrace,
    rng: SimRng,
    mcs: McsIndex,
    counters: FrameStats,
    time_ns: u64,
}

impl Link {
    pub fn new(model: LinkModel, trace: TraceKind, seed: u64) -> Result<Self, LinkError> {
        model.validate()?;
        trace.validate()?;
        Ok(Link {
            model,
            trace: RssTrace::new(trace, seed),
            rng: rng::stream(seed, Stream::Link),
            mcs: McsIndex::MIN,
            counters: FrameStats::default(),
            time_ns: 0,
        })
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    pub fn mcs(&self) -> McsIndex {
        self.mcs
    }

    pub fn set_mcs(&mut self, mcs: McsIndex) {
        self.mcs = mcs;
    }

    pub fn counters(&self) -> FrameStats {
        self.counters
    }

    pub fn rss(&self) -> f64 {
        self.trace.current()
    }

    pub fn observation(&self) -> LinkObservation {
        LinkObservation::new(self.rss())
    }

    pub fn time_ns(&self) -> u64 {
        self.time_ns
    }

    fn attempts_by(&self, t_ns: u64) -> u64 {
        (self.model.attempts_rate * t_ns as f64 / 1e9).floor() as u64
    }

    /// Simulates transmissions up to `t_ns`. Earlier times are ignored.
    pub fn advance_to(&mut self, t_ns: u64) {
        if t_ns <= self.time_ns {
            return;
        }
        let dt_s = (t_ns - self.time_ns) as f64 * 1e-9;
        let attempts = self.attempts_by(t_ns) - self.attempts_by(self.time_ns);
        let delta = sample_window(&self.model, self.mcs, self.rss(), attempts, &mut self.rng);
        self.counters.accumulate(delta);
        self.trace.advance(dt_s);
        self.time_ns = t_ns;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn mcs(v: u8) -> McsIndex {
        McsIndex::new(v).unwrap()
    }

    #[test]
    fn logistic_midpoint_and_asymptote() {
        let model = LinkModel::default();
        for m in McsIndex::all() {
            assert_eq!(fsr_at(&model, m, model.thresholds[m.as_usize()]), 0.5);
            let far = fsr_at(&model, m, model.thresholds[m.as_usize()] + 40.0);
            assert!((far - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn default_model_mcs0_at_minus_90() {
        // 1 / (1 + e^2), evaluated independently.
        let expected = 0.119_202_922_022_117_55;
        let got = fsr_at(&LinkModel::default(), mcs(0), -90.0);
        assert!((got - expected).abs() < 1e-15, "{got}");
    }

    #[test]
    fn generate_frames_edges() {
        let model = LinkModel::default();
        let mut r = rng::stream(1, Stream::Link);
        assert_eq!(generate_frames(&model, mcs(7), -40.0, 0.0, &mut r), FrameStats::default());
        let deep = LinkModel { thresholds: [-200.0, -199.0, -198.0, -197.0, -196.0, -195.0, -194.0, -193.0], ..model };
        let f = generate_frames(&deep, mcs(7), -20.0, 1.0, &mut r);
        assert_eq!(f, FrameStats::new(1000, 1000));
    }

    #[test]
    fn generate_frames_golden_window() {
        // Replays the same stream with the Bernoulli-sum definition.
        let model = LinkModel::default();
        let p = 1.0 / (1.0 + (-64.0f64 + 40.0).exp());
        let mut oracle = rand_chacha::ChaCha8Rng::seed_from_u64_stream(1, 1);
        let mut expected = 0;
        for _ in 0..50 {
            let u = (oracle.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            if u < p {
                expected += 1;
            }
        }
        let mut r = rng::stream(1, Stream::Link);
        let got = generate_frames(&model, mcs(7), -40.0, 0.05, &mut r);
        assert_eq!(got, FrameStats::new(expected, 50));
        assert_eq!(got, FrameStats::new(50, 50));

        // At the logistic midpoint the draw count actually depends on the stream.
        let mut oracle = rand_chacha::ChaCha8Rng::seed_from_u64_stream(1, 1);
        let expected = (0..1000)
            .filter(|_| ((oracle.next_u64() >> 11) as f64 / (1u64 << 53) as f64) < 0.5)
            .count() as u64;
        let mut r = rng::stream(1, Stream::Link);
        let got = generate_frames(&model, mcs(7), -64.0, 1.0, &mut r);
        assert_eq!(got, FrameStats::new(expected, 1000));
        assert_eq!(got, FrameStats::new(MIDPOINT_GOLDEN, 1000));
    }

    const MIDPOINT_GOLDEN: u64 = 512;

    trait SeedStream {
        fn seed_from_u64_stream(seed: u64, stream: u64) -> Self;
    }

    impl SeedStream for rand_chacha::ChaCha8Rng {
        fn seed_from_u64_stream(seed: u64, stream: u64) -> Self {
            use rand::SeedableRng;
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(stream);
            r
        }
    }

    #[test]
    fn oracle_examples() {
        let model = LinkModel::default();
        assert_eq!(oracle_best_mcs(&model, -20.0), mcs(7));
        assert_eq!(oracle_best_mcs(&model, -95.0), mcs(0));
        // Only mcs 3 has a usable success probability.
        let degenerate = LinkModel {
            thresholds: [1e6, 1e6 + 1.0, 1e6 + 2.0, -1e6, 1e6 + 4.0, 1e6 + 5.0, 1e6 + 6.0, 1e6 + 7.0],
            ..model.clone()
        };
        for rss in [-95.0, -60.0, -20.0] {
            assert_eq!(oracle_best_mcs(&degenerate, rss), mcs(3));
        }
    }

    #[test]
    fn oracle_sweep_matches_brute_force() {
        // Frozen from an independent sweep of the default model, bins -95..=-20.
        let expected: Vec<u8> = [
            vec![0; 10],
            vec![1; 4],
            vec![2; 4],
            vec![3; 2],
            vec![4; 5],
            vec![5; 5],
            vec![6; 4],
            vec![7; 42],
        ]
        .concat();
        let model = LinkModel::default();
        let got: Vec<u8> = (-95..=-20).map(|r| oracle_best_mcs(&model, r as f64).value()).collect();
        assert_eq!(got, expected);
        assert!(got.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fsr_monotone_in_rss_and_mcs() {
        let model = LinkModel::default();
        for m in McsIndex::all() {
            let mut prev = -1.0;
            for r in -95..=-20 {
                let v = fsr_at(&model, m, r as f64);
                // Strict until the curve saturates to 1.0 in f64.
                assert!(v > prev || (v == 1.0 && prev == 1.0), "mcs {m} rss {r}");
                prev = v;
            }
        }
        for r in -95..=-20 {
            let vals: Vec<f64> = McsIndex::all().map(|m| fsr_at(&model, m, r as f64)).collect();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn empirical_success_ratio_converges() {
        let model = LinkModel::default();
        let m = mcs(4);
        let rss = -75.0;
        let p = fsr_at(&model, m, rss);
        let mut r = rng::stream(11, Stream::Link);
        let mut total = FrameStats::default();
        for _ in 0..10_000 {
            let f = generate_frames(&model, m, rss, 0.05, &mut r);
            assert!(f.successes <= f.attempts);
            total.accumulate(f);
        }
        let n = total.attempts as f64;
        let se = (p * (1.0 - p) / n).sqrt();
        let empirical = total.successes as f64 / n;
        assert!((empirical - p).abs() < 3.0 * se, "{empirical} vs {p}");
    }

    #[test]
    fn trace_kinds() {
        let mut c = RssTrace::new(TraceKind::Constant { level: -50.0 }, 0);
        assert_eq!(c.advance(0.3), -50.0);
        assert_eq!(advance_trace(&mut c, 10.0), -50.0);

        let mut s = RssTrace::new(TraceKind::Step { levels: vec![-40.0, -80.0], dwell_s: 1.0 }, 0);
        assert_eq!(s.current(), -40.0);
        assert_eq!(s.advance(1.5), -80.0);
        assert_eq!(s.advance(1.0), -40.0);

        let mut clamped = RssTrace::new(TraceKind::Constant { level: -10.0 }, 0);
        assert_eq!(clamped.advance(1.0), -20.0);
    }

    #[test]
    fn random_walk_golden_replay() {
        let kind = TraceKind::RandomWalk { start: -60.0, step_std: 2.0, min: -95.0, max: -20.0 };
        let mut trace = RssTrace::new(kind, 7);
        let got: Vec<f64> = (0..5).map(|_| trace.advance(1.0)).collect();

        let mut oracle = rand_chacha::ChaCha8Rng::seed_from_u64_stream(7, 2);
        let mut unit = || (oracle.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let mut x = -60.0f64;
        let mut expected = Vec::new();
        for _ in 0..5 {
            let u1 = 1.0 - unit();
            let u2 = unit();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            x = (x + 2.0 * z).clamp(-95.0, -20.0);
            expected.push(x);
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn link_attempts_independent_of_chunking() {
        let trace = TraceKind::Constant { level: -50.0 };
        let mut coarse = Link::new(LinkModel::default(), trace.clone(), 3).unwrap();
        let mut fine = Link::new(LinkModel::default(), trace, 3).unwrap();
        coarse.advance_to(100_000_000);
        for i in 1..=1000u64 {
            fine.advance_to(i * 100_000);
        }
        assert_eq!(coarse.counters().attempts, 100);
        assert_eq!(fine.counters().attempts, 100);
    }

    #[test]
    fn link_is_deterministic() {
        let trace = TraceKind::RandomWalk { start: -70.0, step_std: 3.0, min: -95.0, max: -20.0 };
        let run = || {
            let mut link = Link::new(LinkModel::default(), trace.clone(), 99).unwrap();
            let mut out = Vec::new();
            for i in 1..=20u64 {
                link.set_mcs(mcs((i % 8) as u8));
                link.advance_to(i * 50_000_000);
                out.push((link.counters(), link.rss().to_bits()));
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn model_validation() {
        assert!(LinkModel::default().validate().is_ok());
        let mut bad = LinkModel::default();
        bad.thresholds[3] = bad.thresholds[2];
        assert_eq!(bad.validate(), Err(LinkError::ThresholdsNotIncreasing));
        let bad = LinkModel { steepness: 0.0, ..LinkModel::default() };
        assert!(matches!(bad.validate(), Err(LinkError::Steepness(_))));
        let bad = LinkModel { attempts_rate: -1.0, ..LinkModel::default() };
        assert!(matches!(bad.validate(), Err(LinkError::AttemptsRate(_))));
    }
}
