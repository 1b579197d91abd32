//! Seed plumbing. Every consumer draws from its own ChaCha8 stream of the
//! run seed, so adding draws in one place never perturbs another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used with [`stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Link = 1,
    Trace = 2,
    Agent = 3,
    Latency = 4,
    Decor = 5,
    Fuzz = 6,
}

/// ChaCha8 keyed by `seed_from_u64(seed)` with the word stream set to `which`.
pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Uniform in `[0, 1)` from the top 53 bits of one `next_u64`.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller (cosine branch), two uniforms per draw.
pub fn gaussian(rng: &mut impl RngCore) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Binomial(trials, p) as a sum of Bernoulli draws, one uniform per trial.
pub fn binomial(rng: &mut impl RngCore, trials: u64, p: f64) -> u64 {
    (0..trials).filter(|_| unit_f64(rng) < p).count() as u64
}

/// Uniform integer in `[0, n)` by multiply-shift on one `next_u64`.
pub fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a = stream(42, Stream::Link);
        let mut b = stream(42, Stream::Link);
        let mut c = stream(42, Stream::Trace);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..4).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn unit_range() {
        let mut rng = stream(1, Stream::Fuzz);
        for _ in 0..10_000 {
            let u = unit_f64(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn binomial_degenerate() {
        let mut rng = stream(3, Stream::Link);
        assert_eq!(binomial(&mut rng, 1000, 1.0), 1000);
        assert_eq!(binomial(&mut rng, 1000, 0.0), 0);
        assert_eq!(binomial(&mut rng, 0, 0.5), 0);
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = stream(9, Stream::Agent);
        assert!((0..1000).all(|_| below(&mut rng, 8) < 8));
    }
}
