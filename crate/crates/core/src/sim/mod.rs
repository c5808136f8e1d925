//! Lockstep scenario runner.
//!
//! Every step runs the same phases in a fixed order:
//!
//! 1. mobility: vehicles enter, move, leave
//! 2. sensing: RSU computes TTC conflicts
//! 3. signing: RSU signs a warning if one is due
//! 4. channel: genuine broadcast, then adversarial injections
//! 5. verification: receivers in vehicle-id order, per transmission
//! 6. metrics: channel busy sampling
//!
//! The loop is single-threaded; runs with equal configs are reproducible
//! bit for bit (timings aside, which come from the wall clock unless the
//! mock backend is used).

pub mod clock;
pub mod config;
pub mod events;
pub mod rng;

use std::collections::BTreeMap;

use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::rsu::RsuParams;
use crate::agents::{AttackInjector, Provenance, RsuAgent, VehicleAgent};
use crate::channel::{sample_cbr, Channel, CbrMonitor, ChannelEvent, LossModel, Transmitter};
use crate::messaging::crypto::{BackendKind, CryptoError, Millis};
use crate::messaging::timing::TimingSample;
use crate::messaging::verify::VerifyPolicy;
use crate::metrics::report::{AttackRow, CbrRow, GenuineDelivery, MetricsReport, PdrRow, RunMeta};
use crate::metrics::stats::{mean_sign_time, pooled_verify_stats};
use crate::mobility::{advance_vehicle, MotionPlan, VehicleId, VehicleState};
use clock::{step_count, SimClock};
use config::{AttackKind, ConfigError, ScenarioConfig};
use events::{EventLog, Phase};
use rng::RngStream;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("crypto backend failure at step {step}: {source}")]
    Crypto {
        step: u64,
        #[source]
        source: CryptoError,
    },
    #[error("invariant violated at step {step}: {detail}")]
    Invariant { step: u64, detail: String },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub events: EventLog,
    pub sign_samples: Vec<TimingSample>,
    pub verify_samples: BTreeMap<VehicleId, Vec<Millis>>,
}

struct Vehicle {
    plan: MotionPlan,
    state: VehicleState,
    agent: VehicleAgent,
    exited: bool,
}

#[derive(Default)]
struct AttackTally {
    injected: u64,
    delivered: u64,
    accepted: u64,
    rejected: u64,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn crypto_at(step: u64) -> impl FnOnce(CryptoError) -> RunError {
    move |source| RunError::Crypto { step, source }
}

/// Executes the scenario with the given signature backend.
pub fn run(config: &ScenarioConfig, backend_kind: BackendKind) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let seed = config.seed;
    let dt = config.step_size;
    let steps = step_count(config.duration, dt);
    let mut clock = SimClock::new(dt).ok_or_else(|| RunError::Invariant {
        step: 0,
        detail: "step size must be positive".into(),
    })?;
    let mut events = EventLog::default();

    let mut backend = backend_kind.instantiate(RngStream::new(seed, RngStream::RSU_SIGN));
    let not_after = config
        .crypto
        .certificate_lifetime_ms
        .unwrap_or_else(|| config.duration_ms())
        .min(u64::from(u32::MAX)) as u32;
    let mut rsu = RsuAgent::provision(
        backend.as_mut(),
        RsuParams {
            sender_id: config.rsu.sender_id,
            position: config.rsu.position,
            intersection_id: config.intersection.id,
            ttc_threshold: config.rsu.ttc_threshold,
            warning_rate: config.rsu.warning_rate,
            key_seed: config.crypto.key_seed.as_bytes().to_vec(),
            validity_ms: (0, not_after),
            attach_certificate_once: config.crypto.cache_certificates,
        },
    )
    .map_err(crypto_at(0))?;

    let policy = VerifyPolicy {
        trust_anchor: rsu.trust_anchor(),
        freshness_ms: config.crypto.freshness_ms,
        replay_protection: config.crypto.replay_protection,
    };
    let mut vehicles: Vec<Vehicle> = config
        .vehicles
        .iter()
        .map(|spec| Vehicle {
            plan: MotionPlan::from_spec(spec),
            state: VehicleState::pending(spec.id),
            agent: VehicleAgent::new(spec.id, policy.clone(), config.crypto.replay_window),
            exited: false,
        })
        .collect();
    vehicles.sort_by_key(|v| v.state.id);

    let mut channel = Channel::new(LossModel::from(&config.channel.loss_model), config.channel.data_rate, seed);
    let mut cbr = CbrMonitor::new(config.channel.cbr_window, dt);
    let mut injector = AttackInjector::new(
        config.attacks.clone(),
        backend_kind.instantiate(RngStream::new(seed, RngStream::ATTACKER_SIGN)),
        seed,
        rsu.sender_id,
        config.intersection.id,
        rsu.trust_anchor(),
    );

    let mut sign_samples = Vec::new();
    let mut genuine = GenuineDelivery::default();
    let mut tallies: BTreeMap<AttackKind, AttackTally> = config
        .attacks
        .iter()
        .map(|a| (a.kind(), AttackTally::default()))
        .collect();

    for _ in 0..steps {
        let step = clock.step_index();
        let now = clock.now();
        let now_ms = clock.now_ms();

        // mobility
        for v in &mut vehicles {
            if v.exited {
                continue;
            }
            if v.state.active {
                v.state = advance_vehicle(&v.state, &v.plan, dt, now);
                if !v.state.active {
                    v.exited = true;
                    events.push(step, Phase::Mobility, "vehicle_exited", json!({ "vehicle_id": v.state.id }));
                }
            } else if v.plan.entry_time <= now + 1e-9 {
                v.state = VehicleState::enter(v.state.id, &v.plan, now);
                events.push(step, Phase::Mobility, "vehicle_entered", json!({ "vehicle_id": v.state.id }));
            }
        }
        let snapshot: Vec<VehicleState> = vehicles.iter().map(|v| v.state).collect();
        let receivers: Vec<VehicleId> = snapshot.iter().filter(|s| s.active).map(|s| s.id).collect();

        // sensing + signing
        let emission = rsu.step(backend.as_mut(), &snapshot, &clock).map_err(crypto_at(step))?;
        if let Some(e) = &emission {
            events.push(step, Phase::Sensing, "conflicts", json!({ "pairs": e.conflicts }));
            events.push(
                step,
                Phase::Signing,
                "ica_signed",
                json!({
                    "msg_count": e.message.msg_count,
                    "timestamp_ms": e.message.timestamp_ms,
                    "conflicting_vehicles": e.message.conflicting_vehicles,
                    "envelope_len": e.bytes.len(),
                    "envelope_sha256": hex_digest(&e.bytes),
                    "timing": e.timing,
                }),
            );
            sign_samples.push(e.timing);
        }

        // channel
        let mut transmissions: Vec<(ChannelEvent, Vec<u8>, Provenance)> = Vec::new();
        if let Some(e) = emission {
            let event = channel.broadcast(
                e.bytes.len(),
                step,
                Transmitter::Rsu {
                    sender_id: config.rsu.sender_id,
                },
                &receivers,
            );
            genuine.transmitted += 1;
            for v in vehicles.iter_mut().filter(|v| event.deliveries.contains_key(&v.state.id)) {
                v.agent.expected_count += 1;
            }
            injector.capture(step, &e.bytes);
            transmissions.push((event, e.bytes, Provenance::Genuine));
        }
        if !injector.is_idle() {
            let batch = injector.inject(&clock, &mut channel, &receivers).map_err(crypto_at(step))?;
            for (kind, reason) in batch.skipped {
                events.push(step, Phase::Channel, "attack_skipped", json!({ "kind": kind, "reason": reason }));
            }
            for inj in batch.injections {
                tallies.entry(inj.kind).or_default().injected += 1;
                if inj.source_step.is_some() || inj.flipped_bit.is_some() {
                    events.push(
                        step,
                        Phase::Channel,
                        "attack_crafted",
                        json!({
                            "kind": inj.kind,
                            "tx_index": inj.event.tx_index,
                            "source_step": inj.source_step,
                            "flipped_bit": inj.flipped_bit,
                        }),
                    );
                }
                transmissions.push((inj.event, inj.bytes, Provenance::Adversarial(inj.kind)));
            }
        }
        for (event, _, _) in &transmissions {
            events.push(step, Phase::Channel, "transmission", serde_json::to_value(event).expect("event serializes"));
        }

        // verification
        for (event, bytes, provenance) in &transmissions {
            for id in event.delivered_to() {
                let Some(v) = vehicles.iter_mut().find(|v| v.state.id == id) else {
                    return Err(RunError::Invariant {
                        step,
                        detail: format!("delivery to unknown vehicle {id}"),
                    });
                };
                let verdict = v
                    .agent
                    .on_receive(backend.as_ref(), bytes, now_ms, step, event.tx_index, *provenance);
                let timing = v.agent.rx_log().last().and_then(|r| r.timing);
                events.push(
                    step,
                    Phase::Verification,
                    "reception",
                    json!({
                        "vehicle_id": id,
                        "tx_index": event.tx_index,
                        "verdict": verdict,
                        "provenance": provenance,
                        "timing": timing,
                    }),
                );
                match provenance {
                    Provenance::Genuine => {
                        genuine.delivered += 1;
                        if verdict.is_accept() {
                            genuine.accepted += 1;
                        } else {
                            genuine.rejected += 1;
                        }
                    }
                    Provenance::Adversarial(kind) => {
                        let t = tallies.entry(*kind).or_default();
                        t.delivered += 1;
                        if verdict.is_accept() {
                            t.accepted += 1;
                        } else {
                            t.rejected += 1;
                        }
                    }
                }
                if v.agent.received_count > v.agent.expected_count {
                    return Err(RunError::Invariant {
                        step,
                        detail: format!("vehicle {id} received more genuine warnings than were sent"),
                    });
                }
            }
        }

        // metrics
        let busy: f64 = transmissions.iter().map(|(e, _, _)| e.airtime).sum();
        cbr.sample(step, &receivers, busy);

        clock = clock.advance();
    }

    let final_step = clock.step_index();
    let mut pdr_rows = Vec::with_capacity(vehicles.len());
    let mut cbr_rows = Vec::with_capacity(vehicles.len());
    let mut verify_samples = BTreeMap::new();
    for v in &vehicles {
        let id = v.state.id;
        pdr_rows.push(PdrRow {
            vehicle_id: id,
            expected: v.agent.expected_count,
            received: v.agent.received_count,
        });
        let observations = cbr.observations(id);
        for o in &observations {
            events.push(final_step, Phase::Metrics, "busy_observation", serde_json::to_value(o).expect("serializes"));
        }
        let stats = sample_cbr(&observations);
        cbr_rows.push(CbrRow {
            vehicle_id: id,
            mean: stats.map(|s| s.mean),
            std: stats.and_then(|s| s.std),
            windows: stats.map_or(0, |s| s.windows),
        });
        verify_samples.insert(id, v.agent.verify_durations().collect::<Vec<_>>());
    }
    let attack_rows = tallies
        .into_iter()
        .map(|(kind, t)| AttackRow {
            kind,
            injected: t.injected,
            delivered: t.delivered,
            accepted: t.accepted,
            rejected: t.rejected,
        })
        .collect();

    let report = MetricsReport {
        sign_time: mean_sign_time(&sign_samples),
        verify_time_pooled: pooled_verify_stats(&verify_samples),
        pdr_rows,
        cbr_rows,
        attack_rows,
        genuine,
        run_meta: RunMeta {
            seed,
            config_digest: config.digest(),
            duration: config.duration,
            steps,
            backend: backend.name().to_owned(),
        },
    };
    Ok(RunOutcome {
        report,
        events,
        sign_samples,
        verify_samples,
    })
}
