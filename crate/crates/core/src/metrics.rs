//! Closed-form latency and energy models evaluated from traffic counts,
//! hop parameters and the byte ledger.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ByteLedger, EnergyParams, HopParams, TrafficCounts};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricsError {
    #[error("energy rate is undefined for elapsed time {0} ms")]
    UndefinedRate(f64),
}

/// Mean transmission latency in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyReport {
    pub sigma: f64,
}

impl LatencyReport {
    /// Latency attributed to each originated packet (`sigma / mu`), or 0 when
    /// no packet left a device.
    pub fn per_packet(&self, counts: &TrafficCounts) -> f64 {
        if counts.mu == 0 {
            0.0
        } else {
            self.sigma / counts.mu as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Total transmit plus receive energy, joules.
    pub phi_t: f64,
    /// `phi_t / t`, joules per millisecond.
    pub delta_fog: f64,
    /// Elapsed time, milliseconds.
    pub t: f64,
}

impl EnergyReport {
    pub fn new(ledger: &ByteLedger, params: &EnergyParams, t: f64) -> Result<Self, MetricsError> {
        let phi_t = energy_diffusion(ledger, params);
        Ok(Self {
            phi_t,
            delta_fog: energy_rate(phi_t, t)?,
            t,
        })
    }
}

/// Transmission-delay bracket plus gateway-latency bracket, each a linear form
/// in the per-tier packet counts.
pub fn mean_transmission_latency(counts: &TrafficCounts, params: &HopParams) -> LatencyReport {
    let counts = counts.as_array().map(|c| c as f64);
    let transmission: f64 = params.omega.iter().zip(&counts).map(|(w, c)| w * c).sum();
    let processing: f64 = params.gw_latency.iter().zip(&counts).map(|(l, c)| l * c).sum();
    LatencyReport {
        sigma: transmission + processing,
    }
}

/// Transmit brace plus receive brace over the four hops. Byte totals are
/// summed exactly in integers before being weighted.
pub fn energy_diffusion(ledger: &ByteLedger, params: &EnergyParams) -> f64 {
    let bytes = ledger.bytes_per_hop().map(|b| b as f64);
    let transmit: f64 = params.theta_tx.iter().zip(&bytes).map(|(e, b)| e * b).sum();
    let receive: f64 = params.omega_rx.iter().zip(&bytes).map(|(e, b)| e * b).sum();
    transmit + receive
}

pub fn energy_rate(phi_t: f64, t: f64) -> Result<f64, MetricsError> {
    if t > 0.0 && t.is_finite() {
        Ok(phi_t / t)
    } else {
        Err(MetricsError::UndefinedRate(t))
    }
}
