//! Step-loop actors: the roadside unit, the receiving vehicles, and the
//! adversarial injector.

pub mod attacks;
pub mod rsu;
pub mod vehicle;

pub use attacks::{AttackInjector, InjectionBatch};
pub use rsu::{Emission, RsuAgent};
pub use vehicle::{Provenance, RxRecord, VehicleAgent};
