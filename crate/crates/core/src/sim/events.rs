use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Mobility,
    Sensing,
    Signing,
    Channel,
    Verification,
    Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: u64,
    pub phase: Phase,
    pub event_kind: String,
    pub payload: Value,
}

/// Append-only record of everything a run did, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, step: u64, phase: Phase, event_kind: &str, payload: Value) {
        self.records.push(EventRecord {
            step,
            phase,
            event_kind: event_kind.to_owned(),
            payload,
        });
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.records.iter().filter(move |r| r.event_kind == kind)
    }

    /// One JSON object per line, newline terminated.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("event record serializes"));
            out.push('\n');
        }
        out
    }
}
