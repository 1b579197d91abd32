//! Monotonic clock used for every duration in the crate.
//!
//! In virtual mode time moves only through [`SimClock::wait`], which makes
//! stage timings exact and reproducible. In real mode `now_ns` is the host
//! monotonic clock and `wait` blocks the thread.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Virtual,
    Real,
}

impl std::str::FromStr for ClockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "virtual" => Ok(ClockMode::Virtual),
            "real" => Ok(ClockMode::Real),
            other => Err(format!("unknown clock mode `{other}` (expected virtual or real)")),
        }
    }
}

impl std::fmt::Display for ClockMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClockMode::Virtual => "virtual",
            ClockMode::Real => "real",
        })
    }
}

// Below this, real-mode waits spin instead of sleeping.
const SPIN_THRESHOLD: Duration = Duration::from_micros(200);

#[derive(Debug)]
pub struct SimClock {
    mode: ClockMode,
    virtual_ns: AtomicU64,
    origin: Instant,
}

impl SimClock {
    pub fn new(mode: ClockMode) -> Self {
        SimClock {
            mode,
            virtual_ns: AtomicU64::new(0),
            origin: Instant::now(),
        }
    }

    pub fn virtual_clock() -> Self {
        Self::new(ClockMode::Virtual)
    }

    pub fn real() -> Self {
        Self::new(ClockMode::Real)
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn is_virtual(&self) -> bool {
        self.mode == ClockMode::Virtual
    }

    pub fn now_ns(&self) -> u64 {
        match self.mode {
            ClockMode::Virtual => self.virtual_ns.load(Ordering::Acquire),
            ClockMode::Real => self.origin.elapsed().as_nanos() as u64,
        }
    }

    /// Lets `ns` nanoseconds elapse.
    pub fn wait(&self, ns: u64) {
        if ns == 0 {
            return;
        }
        match self.mode {
            ClockMode::Virtual => {
                self.virtual_ns.fetch_add(ns, Ordering::AcqRel);
            }
            ClockMode::Real => {
                let target = self.now_ns() + ns;
                self.wait_until(target);
            }
        }
    }

    /// Waits until `now_ns() >= target_ns`. Never moves the clock backwards.
    pub fn wait_until(&self, target_ns: u64) {
        match self.mode {
            ClockMode::Virtual => {
                self.virtual_ns.fetch_max(target_ns, Ordering::AcqRel);
            }
            ClockMode::Real => loop {
                let now = self.now_ns();
                if now >= target_ns {
                    break;
                }
                let left = Duration::from_nanos(target_ns - now);
                if left > SPIN_THRESHOLD {
                    thread::sleep(left - SPIN_THRESHOLD);
                } else {
                    std::hint::spin_loop();
                }
            },
        }
    }
}

pub fn ms_to_ns(ms: f64) -> u64 {
    (ms * 1e6).round() as u64
}

pub fn ns_to_ms(ns: f64) -> f64 {
    ns / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_advances_only_on_wait() {
        let clock = SimClock::virtual_clock();
        assert_eq!(clock.now_ns(), 0);
        clock.wait(50_000_000);
        assert_eq!(clock.now_ns(), 50_000_000);
        clock.wait_until(10);
        assert_eq!(clock.now_ns(), 50_000_000);
        clock.wait_until(60_000_000);
        assert_eq!(clock.now_ns(), 60_000_000);
    }

    #[test]
    fn real_is_monotonic_and_waits() {
        let clock = SimClock::real();
        let a = clock.now_ns();
        clock.wait(1_000_000);
        let b = clock.now_ns();
        assert!(b >= a + 1_000_000);
    }

    #[test]
    fn ms_conversion() {
        assert_eq!(ms_to_ns(15.105), 15_105_000);
        assert_eq!(ms_to_ns(0.246), 246_000);
        assert_eq!(ms_to_ns(0.299), 299_000);
    }
}
