//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use pqv2x_core::bench::bench_crypto;
use pqv2x_core::messaging::crypto::MockBackend;
use pqv2x_core::messaging::message::EVENT_INTERSECTION_COLLISION_WARNING;
use pqv2x_core::messaging::wire::{ENVELOPE_VERSION, MSG_TYPE_ICA};
use pqv2x_core::messaging::{
    keygen, sign_envelope, trust_anchor_for, Actor, IcaMessage, SignedEnvelope, Verdict, VerifyPolicy,
};
use pqv2x_core::metrics::report::MetricsReport;
use pqv2x_core::metrics::stats::pooled_verify_stats;
use pqv2x_core::mobility::{detect_conflicts, VehicleId, VehicleState};
use pqv2x_core::sim::config::AttackKind;
use pqv2x_core::sim::events::EventLog;
use pqv2x_core::{load_scenario, run, BackendKind, Millis, ScenarioConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn(Instant) -> Outcome;

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(&path).expect("scenario loads")
}

fn within(elapsed: Duration, secs: f64) -> bool {
    elapsed.as_secs_f64() < secs
}

// 1. Exact per-vehicle delivery counts and 2-decimal rendering.
fn delivery_table(start: Instant) -> Outcome {
    let out = run(&scenario("reference.json"), BackendKind::Falcon).expect("reference run");
    let r = &out.report;
    let rows_ok = r.pdr_rows.len() == 8
        && r
            .pdr_rows
            .iter()
            .all(|row| row.expected == 61 && row.received == 57 && format!("{:.2}", row.pdr().unwrap()) == "0.93");
    let csv_ok = r.table1_csv().lines().skip(1).all(|l| l.ends_with(",61,57,0.93"));
    let elapsed = start.elapsed();
    check(
        rows_ok && csv_ok && within(elapsed, 5.0),
        format!(
            "{} vehicles, expected/received {:?}, rendered {:?}, {:.2?}",
            r.pdr_rows.len(),
            r.pdr_rows.iter().map(|p| (p.expected, p.received)).collect::<Vec<_>>(),
            r.pdr_rows.first().and_then(|p| p.pdr()).map(|p| format!("{p:.2}")),
            elapsed
        ),
    )
}

// 2. CBR mean 0.020 +/- 0.005, std <= 0.007 for every vehicle.
fn channel_busy(start: Instant) -> Outcome {
    let out = run(&scenario("reference.json"), BackendKind::Falcon).expect("reference run");
    let mut ok = !out.report.cbr_rows.is_empty();
    let mut worst_mean_dev: f64 = 0.0;
    let mut worst_std: f64 = 0.0;
    for row in &out.report.cbr_rows {
        match (row.mean, row.std) {
            (Some(m), Some(s)) => {
                worst_mean_dev = worst_mean_dev.max((m - 0.020).abs());
                worst_std = worst_std.max(s);
                ok &= (m - 0.020).abs() <= 0.005 && s <= 0.007;
            }
            _ => ok = false,
        }
    }
    let envelope_len = out
        .events
        .of_kind("ica_signed")
        .next()
        .and_then(|e| e.payload["envelope_len"].as_u64())
        .unwrap_or(0);
    let elapsed = start.elapsed();
    check(
        ok && within(elapsed, 5.0),
        format!(
            "envelope {envelope_len} B ({:.3} ms airtime), mean {:.4}, max |mean-0.020| {worst_mean_dev:.4}, max std {worst_std:.4}, {elapsed:.2?}",
            envelope_len as f64 * 8.0 / 6.0e6 * 1e3,
            out.report.cbr_rows.first().and_then(|r| r.mean).unwrap_or(f64::NAN),
        ),
    )
}

// 3. Timing bands with the real backend.
fn timing_bands(start: Instant) -> Outcome {
    let r = match bench_crypto(BackendKind::Falcon, 1000, 42) {
        Ok(r) => r,
        Err(e) => return check(false, format!("bench failed: {e}")),
    };
    let (sign, verify) = (r.sign.mean.0, r.verify.mean.0);
    let elapsed = start.elapsed();
    let ok = verify < sign
        && sign > 0.05
        && sign < 5.0
        && verify > 0.01
        && verify < 2.0
        && r.sign.n == 1000
        && r.verify.n == 1000
        && within(elapsed, 60.0);
    check(
        ok,
        format!(
            "sign mean {sign:.4} ms (band 0.05..5), verify mean {verify:.4} ms (band 0.01..2), verify<sign {}, {elapsed:.2?}",
            verify < sign
        ),
    )
}

// 4. Pooled verify statistics against the flattened-list oracle.
fn pooled_oracle(start: Instant) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..1000 {
        let vehicles = rng.gen_range(0..=8u16);
        let mut map: BTreeMap<VehicleId, Vec<Millis>> = BTreeMap::new();
        for v in 0..vehicles {
            let n = rng.gen_range(0..=40);
            map.insert(v + 1, (0..n).map(|_| Millis(rng.gen_range(0.001..5.0))).collect());
        }
        let flat: Vec<f64> = map.values().flatten().map(|m| m.0).collect();
        let got = pooled_verify_stats(&map);
        if flat.is_empty() {
            mismatches += usize::from(got.is_some());
            continue;
        }
        let Some(got) = got else {
            mismatches += 1;
            continue;
        };
        let n = flat.len() as f64;
        let mean = flat.iter().sum::<f64>() / n;
        let std = (flat.len() >= 2).then(|| (flat.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        worst = worst.max((got.mean.0 - mean).abs());
        match (got.std, std) {
            (Some(a), Some(b)) => worst = worst.max((a.0 - b).abs()),
            (None, None) => {}
            _ => mismatches += 1,
        }
        if got.n != flat.len() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && worst < 1e-12 && within(elapsed, 1.0),
        format!("1000 maps, max abs error {worst:.3e}, structural mismatches {mismatches}, {elapsed:.2?}"),
    )
}

// 5. Conflict detection against an O(n^2) brute force.
fn conflict_oracle(start: Instant) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut pairs_seen = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(0..=10u16);
        let mut ids: Vec<VehicleId> = (1..=40).collect();
        ids.shuffle(&mut rng);
        let vehicles: Vec<VehicleState> = (0..n as usize)
            .map(|i| {
                // Integer TTCs now and then, so gaps land exactly on the threshold.
                let (distance, speed) = if rng.gen_bool(0.3) {
                    (10.0 * rng.gen_range(0..8) as f64, 10.0)
                } else {
                    (rng.gen_range(0.0..120.0), rng.gen_range(0.0..20.0))
                };
                VehicleState {
                    id: ids[i],
                    route_position: 0.0,
                    speed: if rng.gen_bool(0.1) { 0.0 } else { speed },
                    distance_to_reference: distance,
                    passed_reference: rng.gen_bool(0.1),
                    active: rng.gen_bool(0.9),
                }
            })
            .collect();
        let mut expected = Vec::new();
        for a in &vehicles {
            for b in &vehicles {
                if a.id >= b.id {
                    continue;
                }
                let ttc = |v: &VehicleState| {
                    (v.active && !v.passed_reference && v.speed > 0.0).then(|| v.distance_to_reference / v.speed)
                };
                if let (Some(ta), Some(tb)) = (ttc(a), ttc(b)) {
                    if (ta - tb).abs() < 2.0 {
                        expected.push((a.id, b.id));
                    }
                }
            }
        }
        expected.sort_unstable();
        let got: Vec<(VehicleId, VehicleId)> = detect_conflicts(&vehicles, 2.0)
            .iter()
            .map(|p| (p.vehicle_a, p.vehicle_b))
            .collect();
        pairs_seen += expected.len();
        if got != expected {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && within(elapsed, 1.0),
        format!("1000 sets (n<=10), {pairs_seen} conflict pairs, {mismatches} mismatches, {elapsed:.2?}"),
    )
}

// 6. Security soundness: attack scenario over 20 seeds, then 10^4 single-bit flips.
fn security(start: Instant) -> Outcome {
    let base = scenario("attack.json");
    let mut adversarial_accepted = 0;
    let mut genuine_rejected = 0;
    let mut injected = 0;
    for seed in 0..20 {
        let mut cfg = base.clone();
        cfg.seed = seed;
        let out = run(&cfg, BackendKind::Falcon).expect("attack run");
        adversarial_accepted += out.report.adversarial_accepted();
        genuine_rejected += out.report.genuine.rejected;
        injected += AttackKind::ALL
            .iter()
            .filter_map(|k| out.report.attack_row(*k))
            .map(|r| r.injected)
            .sum::<u64>();
    }

    let mut backend = BackendKind::Falcon.instantiate(pqv2x_core::sim::rng::RngStream::new(6, "flip"));
    let (key, cert) = keygen(backend.as_mut(), b"flip-rsu", *b"RSU\x01", 0, 100_000).unwrap();
    let msg = IcaMessage {
        msg_count: 3,
        sender_id: *b"RSU\x01",
        timestamp_ms: 1000,
        intersection_id: 829,
        event_flag: EVENT_INTERSECTION_COLLISION_WARNING,
        conflicting_vehicles: vec![1, 2, 5],
    };
    let (env, _) = sign_envelope(backend.as_mut(), &key, msg.encode(), cert.encode(), Actor::Rsu, 10).unwrap();
    let bytes = env.encode();
    let policy = VerifyPolicy {
        trust_anchor: trust_anchor_for(&cert),
        freshness_ms: 500,
        replay_protection: true,
    };
    let receive = |b: &[u8]| {
        let mut agent = pqv2x_core::agents::VehicleAgent::new(1, policy.clone(), 128);
        agent.on_receive(backend.as_ref(), b, 1000, 10, 0, pqv2x_core::agents::Provenance::Genuine)
    };
    let baseline_ok = receive(&bytes) == Verdict::Accept;
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut flips_accepted = 0;
    let total_bits = bytes.len() * 8;
    for _ in 0..10_000 {
        let bit = rng.gen_range(0..total_bits);
        let mut tampered = bytes.clone();
        tampered[bit / 8] ^= 0x80 >> (bit % 8);
        if receive(&tampered).is_accept() {
            flips_accepted += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        adversarial_accepted == 0
            && genuine_rejected == 0
            && injected == 20 * 30
            && baseline_ok
            && flips_accepted == 0
            && within(elapsed, 60.0),
        format!(
            "20 seeds x {} injections: adversarial accepted {adversarial_accepted}, genuine rejected {genuine_rejected}; \
             10^4 bit flips over {total_bits} bits: accepted {flips_accepted} (unflipped accepted {baseline_ok}), {elapsed:.2?}",
            injected / 20
        ),
    )
}

fn report_bytes(r: &MetricsReport, events: &EventLog) -> [String; 4] {
    [r.table1_csv(), r.table2_csv(), r.table3_json(), events.to_ndjson()]
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.contains("timing") && !k.starts_with("signature_"));
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn without_timings(text: &str) -> Vec<Value> {
    text.lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            strip_timing(&mut v);
            v
        })
        .collect()
}

// 7. Determinism of reports and event logs.
fn determinism(start: Instant) -> Outcome {
    let mut compared = 0;
    let mut differing = Vec::new();
    for name in ["reference.json", "attack.json", "attack_no_replay_window.json"] {
        for seed in [42, 7] {
            let mut cfg = scenario(name);
            cfg.seed = seed;
            let a = run(&cfg, BackendKind::Mock).unwrap();
            let b = run(&cfg, BackendKind::Mock).unwrap();
            compared += 1;
            if report_bytes(&a.report, &a.events) != report_bytes(&b.report, &b.events) {
                differing.push(format!("{name}/{seed}"));
            }
        }
    }
    // Real backend: everything except wall-clock durations must match.
    let cfg = scenario("attack.json");
    let a = run(&cfg, BackendKind::Falcon).unwrap();
    let b = run(&cfg, BackendKind::Falcon).unwrap();
    let falcon_tables = a.report.table1_csv() == b.report.table1_csv() && a.report.table2_csv() == b.report.table2_csv();
    let falcon_events = without_timings(&a.events.to_ndjson()) == without_timings(&b.events.to_ndjson());
    let falcon_summary = without_timings(&a.report.summary_json().to_string())
        == without_timings(&b.report.summary_json().to_string());
    let elapsed = start.elapsed();
    check(
        differing.is_empty() && falcon_tables && falcon_events && falcon_summary,
        format!(
            "{compared} mock-timed runs byte-identical (differing: {differing:?}); falcon runs identical apart from durations: tables {falcon_tables}, events {falcon_events}, summary {falcon_summary}; {elapsed:.2?}"
        ),
    )
}

fn random_bytes(rng: &mut ChaCha8Rng, max: usize) -> Vec<u8> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| rng.gen()).collect()
}

// 8. Wire format round trip and totality.
fn wire_format(start: Instant) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut round_trip_failures = 0;
    let mut encodings = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let payload = if rng.gen_bool(0.5) {
            let n = rng.gen_range(1..=8);
            IcaMessage {
                msg_count: rng.gen_range(0..128),
                sender_id: rng.gen(),
                timestamp_ms: rng.gen(),
                intersection_id: rng.gen(),
                event_flag: EVENT_INTERSECTION_COLLISION_WARNING,
                conflicting_vehicles: (0..n).map(|_| rng.gen()).collect(),
            }
            .encode()
        } else {
            random_bytes(&mut rng, 300)
        };
        let env = SignedEnvelope {
            version: ENVELOPE_VERSION,
            msg_type: MSG_TYPE_ICA,
            payload,
            certificate: random_bytes(&mut rng, 1200),
            signature: random_bytes(&mut rng, 700),
        };
        let bytes = env.encode();
        if SignedEnvelope::decode(&bytes).as_ref() != Ok(&env) || bytes.len() != env.encoded_len() {
            round_trip_failures += 1;
        }
        encodings.push(bytes);
    }

    let backend = MockBackend::default();
    let policy = VerifyPolicy {
        trust_anchor: [0; 32],
        freshness_ms: 500,
        replay_protection: true,
    };
    let mut panics = 0;
    let mut truncations_accepted = 0;
    // Panics here are counted, not printed.
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..10_000 {
        let candidate = if i % 2 == 0 {
            let src = &encodings[rng.gen_range(0..encodings.len())];
            src[..rng.gen_range(0..src.len())].to_vec()
        } else {
            let mut b = random_bytes(&mut rng, 2000);
            if b.len() >= 2 && rng.gen_bool(0.5) {
                b[0] = ENVELOPE_VERSION;
                b[1] = MSG_TYPE_ICA;
            }
            b
        };
        let truncated = i % 2 == 0;
        let result = catch_unwind(AssertUnwindSafe(|| {
            let decoded = SignedEnvelope::decode(&candidate);
            let mut agent = pqv2x_core::agents::VehicleAgent::new(1, policy.clone(), 128);
            let verdict = agent.on_receive(&backend, &candidate, 0, 0, 0, pqv2x_core::agents::Provenance::Genuine);
            (decoded.is_ok(), verdict)
        }));
        match result {
            Ok((decoded, _)) if truncated && decoded => truncations_accepted += 1,
            Ok(_) => {}
            Err(_) => panics += 1,
        }
    }
    std::panic::set_hook(default_hook);
    let elapsed = start.elapsed();
    check(
        round_trip_failures == 0 && panics == 0 && truncations_accepted == 0 && within(elapsed, 5.0),
        format!(
            "10^4 round trips, {round_trip_failures} failures; 10^4 random/truncated decodes, {panics} panics, \
             {truncations_accepted} truncations decoded; {elapsed:.2?}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("delivery table reproduction", delivery_table),
        ("channel busy ratio calibration", channel_busy),
        ("signature timing bands", timing_bands),
        ("pooled statistics oracle", pooled_oracle),
        ("conflict detection oracle", conflict_oracle),
        ("security soundness", security),
        ("determinism", determinism),
        ("wire format round trip", wire_format),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f(Instant::now());
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag}: {name}: {}", i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
