//! Kinematic route-following and time-to-collision conflict detection.
//!
//! Vehicles move along a polyline at a piecewise-constant speed. TTC is
//! measured against the intersection reference point: the time for a
//! vehicle to cover its remaining arc-length to that point at its current
//! speed.

use serde::{Deserialize, Serialize};

use crate::sim::config::{polyline_length, SpeedSegment, VehicleSpec};

pub type VehicleId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRef {
    pub intersection_id: u32,
    pub reference_point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile(Vec<SpeedSegment>);

impl SpeedProfile {
    /// Segments must be sorted by `from`; see config validation.
    pub fn new(segments: Vec<SpeedSegment>) -> Self {
        Self(segments)
    }

    pub fn constant(speed: f64) -> Self {
        Self(vec![SpeedSegment { from: 0.0, speed }])
    }

    /// Speed of the last segment starting at or before `t`; the first
    /// segment applies before any segment has started.
    pub fn speed_at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .find(|s| s.from <= t + 1e-9)
            .or_else(|| self.0.first())
            .map_or(0.0, |s| s.speed)
    }
}

/// Static per-vehicle route data the step loop needs to move a vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub route_length: f64,
    pub reference_arc: f64,
    pub entry_time: f64,
    pub profile: SpeedProfile,
}

impl MotionPlan {
    pub fn from_spec(spec: &VehicleSpec) -> Self {
        Self {
            route_length: polyline_length(&spec.route.points),
            reference_arc: spec.route.reference_arc_length,
            entry_time: spec.entry_time,
            profile: SpeedProfile::new(spec.speed_profile.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub route_position: f64,
    pub speed: f64,
    pub distance_to_reference: f64,
    /// Route position is beyond the reference point.
    pub passed_reference: bool,
    pub active: bool,
}

impl VehicleState {
    /// A vehicle that has not yet entered the simulation.
    pub fn pending(id: VehicleId) -> Self {
        Self {
            id,
            route_position: 0.0,
            speed: 0.0,
            distance_to_reference: 0.0,
            passed_reference: false,
            active: false,
        }
    }

    /// A vehicle at the start of its route at time `t`.
    pub fn enter(id: VehicleId, plan: &MotionPlan, t: f64) -> Self {
        let mut v = Self {
            id,
            route_position: 0.0,
            speed: plan.profile.speed_at(t),
            distance_to_reference: 0.0,
            passed_reference: false,
            active: true,
        };
        v.locate(plan);
        v
    }

    fn locate(&mut self, plan: &MotionPlan) {
        let to_go = plan.reference_arc - self.route_position;
        self.passed_reference = to_go < 0.0;
        self.distance_to_reference = to_go.abs();
    }
}

/// Moves `v` forward by `dt` at its current speed, then takes the profile
/// speed for `t_after`. A vehicle that runs off the end of its route is
/// deactivated.
pub fn advance_vehicle(v: &VehicleState, plan: &MotionPlan, dt: f64, t_after: f64) -> VehicleState {
    debug_assert!(dt > 0.0);
    if !v.active {
        return *v;
    }
    let mut next = *v;
    next.route_position = v.route_position + v.speed * dt;
    next.speed = plan.profile.speed_at(t_after).max(0.0);
    next.locate(plan);
    if next.route_position > plan.route_length {
        next.active = false;
    }
    next
}

/// Seconds until `v` reaches the reference point, or `None` when it is
/// stationary, inactive, or already past the point.
pub fn time_to_reference(v: &VehicleState) -> Option<f64> {
    if !v.active || v.passed_reference || v.speed <= 0.0 {
        return None;
    }
    Some(v.distance_to_reference / v.speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictPair {
    pub vehicle_a: VehicleId,
    pub vehicle_b: VehicleId,
    pub ttc_a: f64,
    pub ttc_b: f64,
    pub ttc_gap: f64,
}

/// All canonical pairs `(a < b)` whose TTCs differ by strictly less than
/// `threshold`, ordered by `(a, b)`.
pub fn detect_conflicts(vehicles: &[VehicleState], threshold: f64) -> Vec<ConflictPair> {
    let mut timed: Vec<(VehicleId, f64)> = vehicles
        .iter()
        .filter_map(|v| time_to_reference(v).map(|t| (v.id, t)))
        .collect();
    timed.sort_by_key(|&(id, _)| id);
    conflicts_from_ttcs(&timed, threshold)
}

/// Conflict pairs from `(id, ttc)` entries already sorted by id.
pub fn conflicts_from_ttcs(timed: &[(VehicleId, f64)], threshold: f64) -> Vec<ConflictPair> {
    let mut pairs = Vec::new();
    for (i, &(a, ta)) in timed.iter().enumerate() {
        for &(b, tb) in &timed[i + 1..] {
            let gap = (ta - tb).abs();
            if gap < threshold {
                pairs.push(ConflictPair {
                    vehicle_a: a,
                    vehicle_b: b,
                    ttc_a: ta,
                    ttc_b: tb,
                    ttc_gap: gap,
                });
            }
        }
    }
    pairs
}

/// Sorted, de-duplicated ids appearing in any pair.
pub fn conflicting_ids(pairs: &[ConflictPair]) -> Vec<VehicleId> {
    let mut ids: Vec<VehicleId> = pairs.iter().flat_map(|p| [p.vehicle_a, p.vehicle_b]).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}
