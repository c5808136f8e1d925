//! Report model and its file renderings.
//!
//! * `table1.csv` per-vehicle delivery: expected, received, PDR (2 decimals)
//! * `table2.csv` per-vehicle CBR mean and standard deviation (3 decimals)
//! * `table3.json` summary with full precision, keys in lexicographic order
//!
//! CSV files use `,` separators, a header row, LF line endings and `.` as
//! decimal separator.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::stats::{pdr, TimingStats};
use crate::mobility::VehicleId;
use crate::sim::config::AttackKind;

pub const TABLE1: &str = "table1.csv";
pub const TABLE2: &str = "table2.csv";
pub const TABLE3: &str = "table3.json";
pub const EVENTS: &str = "events.ndjson";
pub const REPORT_FILES: [&str; 3] = [TABLE1, TABLE2, TABLE3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdrRow {
    pub vehicle_id: VehicleId,
    pub expected: u64,
    pub received: u64,
}

impl PdrRow {
    pub fn pdr(&self) -> Option<f64> {
        pdr(self.received, self.expected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbrRow {
    pub vehicle_id: VehicleId,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub windows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRow {
    pub kind: AttackKind,
    /// Transmissions put on the channel.
    pub injected: u64,
    /// Receptions (transmission x receiver) that reached a vehicle.
    pub delivered: u64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenuineDelivery {
    pub transmitted: u64,
    pub delivered: u64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub config_digest: String,
    pub duration: f64,
    pub steps: u64,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sign_time: Option<TimingStats>,
    pub verify_time_pooled: Option<TimingStats>,
    pub pdr_rows: Vec<PdrRow>,
    pub cbr_rows: Vec<CbrRow>,
    pub attack_rows: Vec<AttackRow>,
    pub genuine: GenuineDelivery,
    pub run_meta: RunMeta,
}

fn timing_json(t: &Option<TimingStats>) -> Value {
    match t {
        Some(t) => json!({
            "mean_ms": t.mean.0,
            "std_ms": t.std.map(|s| s.0),
            "n": t.n,
        }),
        None => Value::Null,
    }
}

fn fixed(x: Option<f64>, decimals: usize) -> String {
    x.map(|v| format!("{v:.decimals$}")).unwrap_or_default()
}

impl MetricsReport {
    pub fn attack_row(&self, kind: AttackKind) -> Option<&AttackRow> {
        self.attack_rows.iter().find(|r| r.kind == kind)
    }

    pub fn adversarial_accepted(&self) -> u64 {
        self.attack_rows.iter().map(|r| r.accepted).sum()
    }

    /// Σ received / Σ expected over all vehicles.
    pub fn overall_pdr(&self) -> Option<f64> {
        let (r, e) = self
            .pdr_rows
            .iter()
            .fold((0, 0), |(r, e), row| (r + row.received, e + row.expected));
        pdr(r, e)
    }

    pub fn table1_csv(&self) -> String {
        let mut out = String::from("Vehicle ID,ICA messages expected,ICA messages received,PDR\n");
        for row in &self.pdr_rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.vehicle_id,
                row.expected,
                row.received,
                fixed(row.pdr(), 2)
            ));
        }
        out
    }

    pub fn table2_csv(&self) -> String {
        let mut out = String::from("Vehicle ID,CBR mean,CBR standard deviation\n");
        for row in &self.cbr_rows {
            out.push_str(&format!(
                "{},{},{}\n",
                row.vehicle_id,
                fixed(row.mean, 3),
                fixed(row.std, 3)
            ));
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        let means: Vec<f64> = self.cbr_rows.iter().filter_map(|r| r.mean).collect();
        let cbr_mean = (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
        let cbr_max_std = self
            .cbr_rows
            .iter()
            .filter_map(|r| r.std)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
        let pdr_rows: Vec<Value> = self
            .pdr_rows
            .iter()
            .map(|r| {
                json!({
                    "vehicle_id": r.vehicle_id,
                    "expected": r.expected,
                    "received": r.received,
                    "pdr": r.pdr(),
                })
            })
            .collect();
        let attacks: Vec<Value> = self
            .attack_rows
            .iter()
            .map(|r| serde_json::to_value(r).expect("attack row serializes"))
            .collect();
        json!({
            "signature_generation": timing_json(&self.sign_time),
            "signature_verification": timing_json(&self.verify_time_pooled),
            "packet_delivery_ratio": {
                "overall": self.overall_pdr(),
                "per_vehicle": pdr_rows,
            },
            "channel_busy_ratio": {
                "mean": cbr_mean,
                "max_std": cbr_max_std,
                "per_vehicle": serde_json::to_value(&self.cbr_rows).expect("cbr rows serialize"),
            },
            "attacks": attacks,
            "genuine": serde_json::to_value(self.genuine).expect("counts serialize"),
            "run": serde_json::to_value(&self.run_meta).expect("run meta serializes"),
        })
    }

    pub fn table3_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary_json()).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes every file to a temporary sibling first and renames them into
/// place only once all writes succeeded.
pub fn write_files_atomically(dir: &Path, files: &[(&str, &[u8])]) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, contents) {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&tmp)(e));
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (i, (tmp, dst)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, dst) {
            cleanup(&staged[i..]);
            for done in &written {
                let _ = fs::remove_file(done);
            }
            return Err(io_err(dst)(e));
        }
        written.push(dst.clone());
    }
    Ok(written)
}

/// Writes `table1.csv`, `table2.csv` and `table3.json`, plus
/// `events.ndjson` when an event log is given.
pub fn emit_report(report: &MetricsReport, dir: &Path, events: Option<&str>) -> Result<Vec<PathBuf>, ReportError> {
    let t1 = report.table1_csv();
    let t2 = report.table2_csv();
    let t3 = report.table3_json();
    let mut files: Vec<(&str, &[u8])> = vec![
        (TABLE1, t1.as_bytes()),
        (TABLE2, t2.as_bytes()),
        (TABLE3, t3.as_bytes()),
    ];
    if let Some(ev) = events {
        files.push((EVENTS, ev.as_bytes()));
    }
    write_files_atomically(dir, &files)
}
