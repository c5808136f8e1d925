//! Simplified fixed-width profile of the J2735 intersection collision
//! avoidance message.
//!
//! ```text
//! msg_count(1) | sender_id(4) | timestamp_ms(4) | intersection_id(4)
//!   | event_flag(1) | n(1) | vehicle_id(2) * n
//! ```

use serde::{Deserialize, Serialize};

use super::wire::{DecodeError, Reader};
use crate::mobility::VehicleId;

pub const EVENT_INTERSECTION_COLLISION_WARNING: u8 = 0x01;
pub const MSG_COUNT_MODULUS: u8 = 128;
pub const MAX_CONFLICTING_VEHICLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IcaMessage {
    pub msg_count: u8,
    pub sender_id: [u8; 4],
    pub timestamp_ms: u32,
    pub intersection_id: u32,
    pub event_flag: u8,
    pub conflicting_vehicles: Vec<VehicleId>,
}

impl IcaMessage {
    pub fn encode(&self) -> Vec<u8> {
        debug_assert!(self.msg_count < MSG_COUNT_MODULUS);
        debug_assert!((1..=MAX_CONFLICTING_VEHICLES).contains(&self.conflicting_vehicles.len()));
        let mut out = Vec::with_capacity(15 + 2 * self.conflicting_vehicles.len());
        out.push(self.msg_count);
        out.extend_from_slice(&self.sender_id);
        out.extend_from_slice(&self.timestamp_ms.to_be_bytes());
        out.extend_from_slice(&self.intersection_id.to_be_bytes());
        out.push(self.event_flag);
        out.push(self.conflicting_vehicles.len() as u8);
        for id in &self.conflicting_vehicles {
            out.extend_from_slice(&id.to_be_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let msg_count = r.u8("msg_count")?;
        if msg_count >= MSG_COUNT_MODULUS {
            return Err(DecodeError::Invalid {
                field: "msg_count",
                reason: format!("{msg_count} >= {MSG_COUNT_MODULUS}"),
            });
        }
        let sender_id = r.array("sender_id")?;
        let timestamp_ms = r.u32("timestamp_ms")?;
        let intersection_id = r.u32("intersection_id")?;
        let event_flag = r.u8("event_flag")?;
        let n = r.u8("vehicle_count")? as usize;
        if !(1..=MAX_CONFLICTING_VEHICLES).contains(&n) {
            return Err(DecodeError::Invalid {
                field: "vehicle_count",
                reason: format!("{n} outside 1..={MAX_CONFLICTING_VEHICLES}"),
            });
        }
        let conflicting_vehicles = (0..n)
            .map(|_| r.u16("vehicle_id"))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(Self {
            msg_count,
            sender_id,
            timestamp_ms,
            intersection_id,
            event_flag,
            conflicting_vehicles,
        })
    }
}

pub fn next_msg_count(count: u8) -> u8 {
    (count + 1) % MSG_COUNT_MODULUS
}
