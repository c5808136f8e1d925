use serde::{Deserialize, Serialize};

/// Lockstep simulation clock.
///
/// `now` is always recomputed from `step_index * step_size`, never summed,
/// so long runs do not accumulate floating-point drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    now: f64,
    step_size: f64,
    step_index: u64,
}

impl SimClock {
    pub const DEFAULT_STEP: f64 = 0.1;

    /// Returns `None` unless `step_size` is finite and positive.
    pub fn new(step_size: f64) -> Option<Self> {
        (step_size.is_finite() && step_size > 0.0).then_some(Self {
            now: 0.0,
            step_size,
            step_index: 0,
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Current time in whole milliseconds since scenario start.
    pub fn now_ms(&self) -> u64 {
        (self.step_index as f64 * self.step_size * 1000.0).round() as u64
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    #[must_use]
    pub fn advance(self) -> Self {
        let step_index = self.step_index + 1;
        Self {
            now: step_index as f64 * self.step_size,
            step_size: self.step_size,
            step_index,
        }
    }
}

/// Number of lockstep steps needed to cover `duration`.
///
/// A relative slack of 1e-9 absorbs quotients such as `6.1 / 0.1` that land
/// an ulp above an integer.
pub fn step_count(duration: f64, step_size: f64) -> u64 {
    let q = duration / step_size;
    let rounded = q.round();
    if (q - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as u64
    } else {
        q.ceil() as u64
    }
}
