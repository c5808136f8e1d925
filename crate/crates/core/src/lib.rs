//! Deterministic discrete-event testbed for C-V2X intersection collision
//! avoidance (ICA) warnings signed with Falcon-512.
//!
//! A roadside unit observes vehicles approaching an intersection, detects
//! time-to-collision conflicts, and broadcasts signed ICA warnings over an
//! abstract PC5 Mode-4 sidelink. Vehicles verify every envelope they
//! receive. The run produces signature timing statistics, per-vehicle
//! packet delivery ratio and per-vehicle channel busy ratio.
//!
//! Everything is driven from a single lockstep loop in [`sim::run`].

pub mod agents;
pub mod bench;
pub mod channel;
pub mod messaging;
pub mod metrics;
pub mod mobility;
pub mod sim;

pub use messaging::crypto::{BackendKind, Millis};
pub use metrics::report::MetricsReport;
pub use sim::config::{load_scenario, ScenarioConfig};
pub use sim::{run, RunError, RunOutcome};
