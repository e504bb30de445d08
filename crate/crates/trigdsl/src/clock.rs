//! Monotonic time as an injected dependency.
//!
//! All timestamps in the runtime are monotonic nanoseconds since an
//! arbitrary per-process origin. Production code uses [`SystemClock`];
//! tests and deterministic replays drive a [`VirtualClock`] by hand.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// Monotonic nanoseconds since an arbitrary origin.
pub type Nanos = u64;

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

/// Converts (possibly fractional) seconds to nanoseconds, saturating at zero.
pub fn secs_to_nanos(seconds: f64) -> Nanos {
    if !seconds.is_finite() || seconds <= 0.0 {
        return 0;
    }
    (seconds * NANOS_PER_SEC as f64).round() as Nanos
}

/// A monotonic time source.
pub trait Clock: Send + Sync {
    fn now(&self) -> Nanos;
}

/// Wall-clock-backed monotonic time, measured from construction.
#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Nanos {
        self.origin.elapsed().as_nanos() as Nanos
    }
}

/// Manually advanced time for deterministic tests and stream replay.
/// Never moves backwards: `set` to an earlier instant is ignored.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(start: Nanos) -> Self {
        VirtualClock {
            now: AtomicU64::new(start),
        }
    }

    /// Moves time forward by `delta` and returns the new now.
    pub fn advance(&self, delta: Nanos) -> Nanos {
        self.now.fetch_add(delta, Ordering::SeqCst) + delta
    }

    /// Jumps to `instant` if it is not in the past.
    pub fn set(&self, instant: Nanos) {
        self.now.fetch_max(instant, Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Nanos {
        self.now.load(Ordering::SeqCst)
    }
}
