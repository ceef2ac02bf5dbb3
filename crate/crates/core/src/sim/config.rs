use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dist::Dist;
use crate::authz::DEFAULT_TOKEN_TTL_MS;
use crate::ledger::{Miner, DEFAULT_DIFFICULTY};
use crate::model::{EnergyParams, HopParams, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// One simulation run. Times are milliseconds, energies joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_devices: usize,
    pub n_ogw: usize,
    pub n_iotg: usize,
    pub n_fgw: usize,
    pub n_bcg: usize,
    /// Packet generation period per device.
    pub period: f64,
    pub service_dist: Dist,
    pub length_dist: Dist,
    /// Retransmissions allowed per packet on each hop; 0 disables them.
    pub retransmission_limit: u32,
    /// Offer the next packet as soon as the first-hop channel frees.
    pub saturated: bool,
    /// Probability that a gateway forwards a serviced packet to the next
    /// tier rather than absorbing it.
    pub aggregation_ratio: f64,
    pub hop_params: HopParams,
    pub energy_params: EnergyParams,
    pub difficulty: u32,
    pub tx_per_block: usize,
    /// Spacing of mining ticks; at most one block per tick.
    pub mining_interval: u64,
    pub miners: Vec<Miner>,
    pub duration: f64,
    pub protocol_sessions: usize,
    pub token_ttl: u64,
    pub single_use_tokens: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_devices: 10,
            n_ogw: 4,
            n_iotg: 2,
            n_fgw: 2,
            n_bcg: 1,
            period: 100.0,
            service_dist: Dist::Exponential { rate: 0.5 },
            length_dist: Dist::Uniform { low: 64.0, high: 512.0 },
            retransmission_limit: 3,
            saturated: false,
            aggregation_ratio: 0.8,
            hop_params: HopParams::default(),
            energy_params: EnergyParams::default(),
            difficulty: DEFAULT_DIFFICULTY,
            tx_per_block: 5,
            mining_interval: 50,
            miners: vec![
                Miner {
                    id: "miner-0".into(),
                    fog_demand: 30.0,
                },
                Miner {
                    id: "miner-1".into(),
                    fog_demand: 50.0,
                },
            ],
            duration: 60_000.0,
            protocol_sessions: 3,
            token_ttl: DEFAULT_TOKEN_TTL_MS,
            single_use_tokens: false,
        }
    }
}

impl SimConfig {
    pub fn topology(&self) -> Result<Topology, ConfigError> {
        Topology::new(self.n_devices, self.n_ogw, self.n_iotg, self.n_fgw, self.n_bcg)
            .map_err(|e| ConfigError::new("topology", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, count) in [
            ("n_devices", self.n_devices),
            ("n_ogw", self.n_ogw),
            ("n_iotg", self.n_iotg),
            ("n_fgw", self.n_fgw),
            ("n_bcg", self.n_bcg),
            ("tx_per_block", self.tx_per_block),
        ] {
            if count == 0 {
                return Err(ConfigError::new(field, "must be >= 1"));
            }
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(ConfigError::new("period", format!("must be > 0, got {}", self.period)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ConfigError::new(
                "duration",
                format!("must be > 0, got {}", self.duration),
            ));
        }
        if !(self.aggregation_ratio > 0.0 && self.aggregation_ratio <= 1.0) {
            return Err(ConfigError::new(
                "aggregation_ratio",
                format!("must lie in (0, 1], got {}", self.aggregation_ratio),
            ));
        }
        if self.mining_interval == 0 {
            return Err(ConfigError::new("mining_interval", "must be >= 1"));
        }
        if self.difficulty > 64 {
            return Err(ConfigError::new("difficulty", "at most 64 hex digits"));
        }
        if self.token_ttl == 0 {
            return Err(ConfigError::new("token_ttl", "must be >= 1"));
        }
        if self.protocol_sessions > self.n_devices {
            return Err(ConfigError::new(
                "protocol_sessions",
                format!("at most one session per device ({} devices)", self.n_devices),
            ));
        }
        self.service_dist
            .validate()
            .map_err(|r| ConfigError::new("service_dist", r))?;
        self.length_dist
            .validate()
            .map_err(|r| ConfigError::new("length_dist", r))?;
        self.hop_params
            .validate()
            .map_err(|e| ConfigError::new("hop_params", e.to_string()))?;
        self.energy_params
            .validate()
            .map_err(|e| ConfigError::new("energy_params", e.to_string()))?;
        if self.miners.is_empty() {
            return Err(ConfigError::new("miners", "at least one miner is required"));
        }
        for miner in &self.miners {
            miner
                .validate()
                .map_err(|e| ConfigError::new("miners", e.to_string()))?;
        }
        if self.miners.iter().all(|m| m.fog_demand == 0.0) {
            return Err(ConfigError::new("miners", "no miner has a positive fog demand"));
        }
        Ok(())
    }
}
