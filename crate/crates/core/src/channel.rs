//! Abstract PC5 Mode-4 broadcast medium.
//!
//! Every active vehicle is in range of every transmitter. A transmission
//! occupies the medium for `bytes * 8 / data_rate` seconds whether or not
//! it is decoded, and a loss model decides per receiver whether it is
//! delivered.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::metrics::stats::sample_stats;
use crate::mobility::VehicleId;
use crate::sim::config::{AttackKind, LossModelSpec};
use crate::sim::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    Bernoulli { p: f64 },
    /// Drops the whole broadcast, for every receiver, when its transmission
    /// index is in the set.
    Trace { drop_set: BTreeSet<u64> },
}

impl From<&LossModelSpec> for LossModel {
    fn from(spec: &LossModelSpec) -> Self {
        match spec {
            LossModelSpec::Bernoulli { p } => LossModel::Bernoulli { p: *p },
            LossModelSpec::Trace { drop_set } => LossModel::Trace {
                drop_set: drop_set.iter().copied().collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    Delivered,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Transmitter {
    Rsu { sender_id: u32 },
    Adversary { attack: AttackKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEvent {
    /// Position of this transmission in the channel's overall sequence.
    pub tx_index: u64,
    pub tx_step: u64,
    pub sender: Transmitter,
    pub envelope_bytes_len: usize,
    /// Seconds.
    pub airtime: f64,
    pub deliveries: BTreeMap<VehicleId, Delivery>,
    /// Ground truth for scoring; receivers never see this flag.
    pub adversarial: bool,
}

impl ChannelEvent {
    pub fn delivered_count(&self) -> usize {
        self.deliveries.values().filter(|d| **d == Delivery::Delivered).count()
    }

    pub fn lost_count(&self) -> usize {
        self.deliveries.len() - self.delivered_count()
    }

    pub fn delivered_to(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.deliveries
            .iter()
            .filter(|(_, d)| **d == Delivery::Delivered)
            .map(|(id, _)| *id)
    }
}

pub fn airtime_of(envelope_len: usize, data_rate: f64) -> f64 {
    envelope_len as f64 * 8.0 / data_rate
}

#[derive(Debug, Clone)]
pub struct Channel {
    loss: LossModel,
    rng: RngStream,
    data_rate: f64,
    next_tx: u64,
}

impl Channel {
    pub fn new(loss: LossModel, data_rate: f64, seed: u64) -> Self {
        Self {
            loss,
            rng: RngStream::new(seed, RngStream::CHANNEL_LOSS),
            data_rate,
            next_tx: 0,
        }
    }

    pub fn transmissions(&self) -> u64 {
        self.next_tx
    }

    /// `receivers` must be sorted by id; Bernoulli draws are taken in that
    /// order.
    pub fn broadcast(
        &mut self,
        envelope_len: usize,
        tx_step: u64,
        sender: Transmitter,
        receivers: &[VehicleId],
    ) -> ChannelEvent {
        debug_assert!(receivers.windows(2).all(|w| w[0] < w[1]));
        let tx_index = self.next_tx;
        self.next_tx += 1;
        let deliveries = match &self.loss {
            LossModel::Bernoulli { p } => receivers
                .iter()
                .map(|&id| {
                    let lost = self.rng.unit() < *p;
                    (id, if lost { Delivery::Lost } else { Delivery::Delivered })
                })
                .collect(),
            LossModel::Trace { drop_set } => {
                let outcome = if drop_set.contains(&tx_index) {
                    Delivery::Lost
                } else {
                    Delivery::Delivered
                };
                receivers.iter().map(|&id| (id, outcome)).collect()
            }
        };
        ChannelEvent {
            tx_index,
            tx_step,
            sender,
            envelope_bytes_len: envelope_len,
            airtime: airtime_of(envelope_len, self.data_rate),
            deliveries,
            adversarial: matches!(sender, Transmitter::Adversary { .. }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusyObservation {
    pub vehicle_id: VehicleId,
    pub window_start: f64,
    pub window_len: f64,
    pub busy_time: f64,
}

impl BusyObservation {
    pub fn ratio(&self) -> f64 {
        self.busy_time / self.window_len
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct WindowAccum {
    active_steps: u64,
    busy: f64,
}

/// Accumulates per-vehicle busy time in fixed windows aligned to multiples
/// of the window length. A vehicle observes only the steps during which it
/// is active, so a window it joins part-way is shorter.
#[derive(Debug, Clone)]
pub struct CbrMonitor {
    window: f64,
    step_size: f64,
    per_vehicle: BTreeMap<VehicleId, BTreeMap<u64, WindowAccum>>,
}

impl CbrMonitor {
    pub fn new(window: f64, step_size: f64) -> Self {
        Self {
            window,
            step_size,
            per_vehicle: BTreeMap::new(),
        }
    }

    fn window_index(&self, step_index: u64) -> u64 {
        (step_index as f64 * self.step_size / self.window + 1e-9).floor() as u64
    }

    /// Records one step of observation. Busy time within a step is capped
    /// at the step length.
    pub fn sample(&mut self, step_index: u64, observers: &[VehicleId], busy_in_step: f64) {
        let idx = self.window_index(step_index);
        let busy = busy_in_step.clamp(0.0, self.step_size);
        for &id in observers {
            let acc = self.per_vehicle.entry(id).or_default().entry(idx).or_default();
            acc.active_steps += 1;
            acc.busy += busy;
        }
    }

    pub fn observations(&self, vehicle: VehicleId) -> Vec<BusyObservation> {
        self.per_vehicle
            .get(&vehicle)
            .into_iter()
            .flatten()
            .map(|(&idx, acc)| {
                let window_len = acc.active_steps as f64 * self.step_size;
                BusyObservation {
                    vehicle_id: vehicle,
                    window_start: idx as f64 * self.window,
                    window_len,
                    busy_time: acc.busy.min(window_len),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbrStats {
    pub mean: f64,
    /// Sample standard deviation across windows; needs two windows.
    pub std: Option<f64>,
    pub windows: usize,
}

/// Mean and sample standard deviation (n - 1) of per-window busy ratios.
/// `None` when there are no windows.
pub fn sample_cbr(observations: &[BusyObservation]) -> Option<CbrStats> {
    debug_assert!(observations.iter().all(|o| o.window_len > 0.0));
    let ratios: Vec<f64> = observations.iter().map(BusyObservation::ratio).collect();
    sample_stats(&ratios).map(|s| CbrStats {
        mean: s.mean,
        std: s.std,
        windows: s.n,
    })
}
