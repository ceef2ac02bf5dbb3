use serde::Serialize;

use crate::authz::ProtocolEvent;
use crate::model::{LedgerSummary, TrafficCounts};

/// Per-hop attempt accounting. Every attempt (`offered + retransmissions`)
/// ends up completed, in service at the horizon, dropped, or backed off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct HopStats {
    pub offered: u64,
    pub retransmissions: u64,
    pub completed: u64,
    pub drops: u64,
    pub backoffs: u64,
    /// Absorbed by the receiving gateway instead of forwarded.
    pub aggregated: u64,
    pub in_service: u64,
    pub pending_retries: u64,
}

impl HopStats {
    pub fn attempts(&self) -> u64 {
        self.offered + self.retransmissions
    }

    /// Packets offered to the hop that have no final outcome yet.
    pub fn in_flight(&self) -> u64 {
        self.in_service + self.pending_retries
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SessionStatus {
    AwaitingAnchor,
    Completed { at: u64 },
    Failed { step: u8, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionOutcome {
    pub session: usize,
    pub device: String,
    pub status: SessionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub traffic: TrafficCounts,
    /// Set when the realized counts break the strict descending order.
    pub ordering_warning: Option<String>,
    pub ledger: LedgerSummary,
    pub hops: [HopStats; 4],
    pub generated: u64,
    /// Packets serviced by the blockchain gateway.
    pub delivered: u64,
    pub aggregated: u64,
    /// Aggregate latency, ms.
    pub sigma: f64,
    /// `sigma / mu`, ms.
    pub sigma_per_packet: f64,
    /// Joules.
    pub phi_t: f64,
    /// Joules per ms.
    pub delta_fog: f64,
    pub drops: u64,
    pub retransmissions: u64,
    pub blocks_mined: u64,
    pub chain_bytes: u64,
    pub chain_valid: bool,
    pub pending_transactions: u64,
    pub miner_wins: Vec<(String, u64)>,
    /// Sum of all gateway service times, ms.
    pub busy_time_ms: f64,
    /// `busy_time_ms` in seconds.
    pub action_duration_s: f64,
    pub wall_clock_s: f64,
    pub sessions: Vec<SessionOutcome>,
    #[serde(skip)]
    pub protocol_events: Vec<ProtocolEvent>,
}

impl SimReport {
    pub fn energy_kj(&self) -> f64 {
        self.phi_t / 1000.0
    }

    /// Copy with the wall-clock field zeroed, for determinism comparisons.
    pub fn without_wall_clock(&self) -> Self {
        Self {
            wall_clock_s: 0.0,
            ..self.clone()
        }
    }
}
