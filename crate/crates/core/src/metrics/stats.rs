use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::messaging::crypto::Millis;
use crate::messaging::timing::{TimingKind, TimingSample};
use crate::mobility::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    /// Sample standard deviation (denominator n - 1); `None` below two samples.
    pub std: Option<f64>,
    pub n: usize,
}

pub fn sample_stats(xs: &[f64]) -> Option<SampleStats> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (n >= 2).then(|| {
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Some(SampleStats { mean, std, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean: Millis,
    pub std: Option<Millis>,
    pub n: usize,
}

impl From<SampleStats> for TimingStats {
    fn from(s: SampleStats) -> Self {
        Self {
            mean: Millis(s.mean),
            std: s.std.map(Millis),
            n: s.n,
        }
    }
}

/// Mean and sample deviation of the signing samples; other kinds are ignored.
pub fn mean_sign_time(samples: &[TimingSample]) -> Option<TimingStats> {
    let xs: Vec<f64> = samples
        .iter()
        .filter(|s| s.kind == TimingKind::Sign)
        .map(|s| s.duration.0)
        .collect();
    sample_stats(&xs).map(TimingStats::from)
}

/// Pooled verification statistics across vehicles:
///
/// ```text
/// mean = ΣvΣi t[v][i] / ΣvN[v]
/// std  = sqrt( ΣvΣi (t[v][i] - mean)^2 / (ΣvN[v] - 1) )
/// ```
pub fn pooled_verify_stats(per_vehicle: &BTreeMap<VehicleId, Vec<Millis>>) -> Option<TimingStats> {
    let total_n: usize = per_vehicle.values().map(Vec::len).sum();
    if total_n == 0 {
        return None;
    }
    let total: f64 = per_vehicle
        .values()
        .map(|ts| ts.iter().map(|t| t.0).sum::<f64>())
        .sum();
    let mean = total / total_n as f64;
    let std = (total_n >= 2).then(|| {
        let ss: f64 = per_vehicle
            .values()
            .map(|ts| ts.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>())
            .sum();
        (ss / (total_n - 1) as f64).sqrt()
    });
    Some(TimingStats {
        mean: Millis(mean),
        std: std.map(Millis),
        n: total_n,
    })
}

/// `received / expected`; `None` when nothing was expected.
pub fn pdr(received: u64, expected: u64) -> Option<f64> {
    debug_assert!(received <= expected);
    (expected > 0).then(|| received as f64 / expected as f64)
}
