//! Brute-force evaluators for the latency and energy formulas, written
//! independently of the production code paths.

use fogchain::model::{ByteEntry, ByteLedger, EnergyParams, Hop, HopParams, Topology, TrafficCounts};
use rand::Rng;

/// Both brackets spelled out term by term.
pub fn latency_oracle(c: &TrafficCounts, p: &HopParams) -> f64 {
    let (mu, theta, tau, eps) = (c.mu as f64, c.theta as f64, c.tau as f64, c.epsilon_pkts as f64);
    let [w1, w2, w3, w4] = p.omega;
    let [e1, e2, e3, e4] = p.gw_latency;
    (w1 * mu + w2 * theta + w3 * tau + w4 * eps) + (e1 * mu + e2 * theta + e3 * tau + e4 * eps)
}

/// Dense sender x receiver byte matrix for one hop.
pub fn byte_matrix(ledger: &ByteLedger, hop: Hop) -> Vec<Vec<u64>> {
    let (rows, cols) = ledger.topology().bounds(hop);
    let mut m = vec![vec![0u64; cols]; rows];
    for e in ledger.entries() {
        if e.hop == hop {
            m[e.sender][e.receiver] += e.bytes;
        }
    }
    m
}

/// The double summation over one matrix.
pub fn double_sum(m: &[Vec<u64>]) -> u64 {
    let mut total = 0u64;
    for row in m {
        for &cell in row {
            total += cell;
        }
    }
    total
}

/// Per-hop byte totals via the eight double summations.
pub fn hop_sums(ledger: &ByteLedger) -> [u64; 4] {
    Hop::ALL.map(|h| double_sum(&byte_matrix(ledger, h)))
}

/// Energy accumulated cell by cell: each matrix cell contributes its bytes
/// times the transmit coefficient, then times the receive coefficient.
pub fn energy_oracle(ledger: &ByteLedger, p: &EnergyParams) -> f64 {
    let mut transmit = 0.0;
    let mut receive = 0.0;
    for hop in Hop::ALL {
        for row in byte_matrix(ledger, hop) {
            for cell in row {
                transmit += p.theta_tx[hop.index()] * cell as f64;
                receive += p.omega_rx[hop.index()] * cell as f64;
            }
        }
    }
    transmit + receive
}

pub fn rate_oracle(ledger: &ByteLedger, p: &EnergyParams, t: f64) -> f64 {
    energy_oracle(ledger, p) / t
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn random_ledger<R: Rng>(rng: &mut R) -> ByteLedger {
    let topology = Topology::new(
        rng.random_range(1..30),
        rng.random_range(1..6),
        rng.random_range(1..4),
        rng.random_range(1..4),
        rng.random_range(1..3),
    )
    .unwrap();
    let mut ledger = ByteLedger::new(topology);
    for _ in 0..rng.random_range(0..200) {
        let hop = Hop::ALL[rng.random_range(0..4)];
        let (rows, cols) = topology.bounds(hop);
        ledger
            .record(ByteEntry {
                hop,
                sender: rng.random_range(0..rows),
                receiver: rng.random_range(0..cols),
                bytes: rng.random_range(0..10_000),
                timestamp: rng.random_range(0.0..1e6),
            })
            .unwrap();
    }
    ledger
}

pub fn random_energy<R: Rng>(rng: &mut R) -> EnergyParams {
    EnergyParams {
        theta_tx: std::array::from_fn(|_| rng.random_range(0.0..1e-2)),
        omega_rx: std::array::from_fn(|_| rng.random_range(0.0..1e-2)),
    }
}
