//! Run statistics: signature timings, pooled verification timings, packet
//! delivery ratio and channel busy ratio, plus the CSV/JSON renderings.

pub mod report;
pub mod stats;

pub use report::{emit_report, AttackRow, CbrRow, MetricsReport, PdrRow, ReportError};
pub use stats::{mean_sign_time, pdr, pooled_verify_stats, sample_stats, SampleStats, TimingStats};
