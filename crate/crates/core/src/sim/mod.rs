//! Seeded discrete-event engine: periodic (or saturated) packet generation,
//! busy-channel service with bounded retransmission, per-tier forwarding
//! through the gateway hierarchy, periodic mining and authorization sessions.

mod config;
mod dist;
mod kernel;
mod report;
mod rng;
mod trace;

use thiserror::Error;

pub use config::{ConfigError, SimConfig};
pub use dist::Dist;
pub use kernel::{generate_packet, mining_tick, service_packet, Channel, Kernel, MinedBlock, Packet, ServiceOutcome};
pub use report::{HopStats, SessionOutcome, SessionStatus, SimReport};
pub use rng::{stream, Streams};
pub use trace::TraceEvent;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Validates `config` and runs it to the horizon.
pub fn run(config: &SimConfig) -> Result<SimReport, SimError> {
    Ok(Kernel::new(config.clone())?.run())
}

pub fn run_with_trace(config: &SimConfig) -> Result<(SimReport, Vec<TraceEvent>), SimError> {
    Ok(Kernel::new(config.clone())?.run_with_trace())
}
