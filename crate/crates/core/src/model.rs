//! Domain types for IoT nodes, the gateway hierarchy, traffic counts and the
//! per-hop parameter sets that feed the latency and energy models.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("node id must be non-empty")]
    EmptyId,
    #[error("node must sense at least one event type")]
    EmptyEventTypes,
    #[error("node status must be 0 or 1, got {0}")]
    InvalidStatus(u8),
    #[error("location timestamp must be a finite value >= 0, got {0}")]
    InvalidTimestamp(f64),
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("topology needs at least one device")]
    NoDevices,
    #[error("{tier} needs at least one instance")]
    EmptyTier { tier: Tier },
    #[error("{field}[{index}] must be finite and >= 0, got {value}")]
    NegativeParameter {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error(
        "{hop} entry index out of range: sender {sender} (< {sender_bound}), receiver {receiver} (< {receiver_bound})"
    )]
    IndexOutOfRange {
        hop: Hop,
        sender: usize,
        sender_bound: usize,
        receiver: usize,
        receiver_bound: usize,
    },
}

/// Activity flag of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Inactive,
    Active,
}

impl Status {
    pub fn from_flag(flag: u8) -> Result<Self, ModelError> {
        match flag {
            0 => Ok(Status::Inactive),
            1 => Ok(Status::Active),
            other => Err(ModelError::InvalidStatus(other)),
        }
    }

    pub fn flag(self) -> u8 {
        match self {
            Status::Inactive => 0,
            Status::Active => 1,
        }
    }
}

/// Position of a node at a simulation instant (meters, milliseconds).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub timestamp: f64,
}

impl Location {
    pub fn new(x: f64, y: f64, z: f64, timestamp: f64) -> Result<Self, ModelError> {
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(ModelError::InvalidTimestamp(timestamp));
        }
        Ok(Self { x, y, z, timestamp })
    }
}

/// An IoT node: identity, status, sensed event types, location,
/// specification and application instance.
///
/// Location and specification are carried for reporting only; no model
/// reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoTNode {
    id: String,
    status: Status,
    event_types: BTreeSet<String>,
    location: Location,
    spec: String,
    app_instance: String,
}

pub fn new_iot_node<I, S>(
    id: impl Into<String>,
    status: u8,
    event_types: I,
    location: Location,
    spec: impl Into<String>,
    app_instance: impl Into<String>,
) -> Result<IoTNode, ModelError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let id = id.into();
    if id.is_empty() {
        return Err(ModelError::EmptyId);
    }
    let event_types: BTreeSet<String> = event_types.into_iter().map(Into::into).collect();
    if event_types.is_empty() {
        return Err(ModelError::EmptyEventTypes);
    }
    let status = Status::from_flag(status)?;
    Location::new(location.x, location.y, location.z, location.timestamp)?;
    Ok(IoTNode {
        id,
        status,
        event_types,
        location,
        spec: spec.into(),
        app_instance: app_instance.into(),
    })
}

impl IoTNode {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    pub fn set_status(&mut self, status: Status) {
        self.status = status;
    }

    pub fn event_types(&self) -> &BTreeSet<String> {
        &self.event_types
    }

    pub fn location(&self) -> &Location {
        &self.location
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn app_instance(&self) -> &str {
        &self.app_instance
    }
}

/// A set of nodes with pairwise distinct ids.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    nodes: Vec<IoTNode>,
    ids: HashMap<String, usize>,
}

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: IoTNode) -> Result<usize, ModelError> {
        if self.ids.contains_key(&node.id) {
            return Err(ModelError::DuplicateId(node.id));
        }
        self.ids.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    pub fn by_id(&self, id: &str) -> Option<&IoTNode> {
        self.ids.get(id).map(|&i| &self.nodes[i])
    }

    pub fn get(&self, index: usize) -> Option<&IoTNode> {
        self.nodes.get(index)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &IoTNode> {
        self.nodes.iter()
    }
}

/// Gateway tiers along the forwarding path, in path order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Ogw,
    Iotg,
    Fgw,
    Bcg,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Ogw, Tier::Iotg, Tier::Fgw, Tier::Bcg];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Tier> {
        Tier::ALL.get(self.index() + 1).copied()
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Ogw => "OGW",
            Tier::Iotg => "IoTG",
            Tier::Fgw => "FGW",
            Tier::Bcg => "BCG",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayTier {
    tier: Tier,
    instance_count: usize,
}

impl GatewayTier {
    pub fn new(tier: Tier, instance_count: usize) -> Result<Self, ModelError> {
        if instance_count == 0 {
            return Err(ModelError::EmptyTier { tier });
        }
        Ok(Self { tier, instance_count })
    }

    pub fn tier(&self) -> Tier {
        self.tier
    }

    pub fn instance_count(&self) -> usize {
        self.instance_count
    }
}

/// The four links of the forwarding path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hop {
    DeviceToOgw,
    OgwToIotg,
    IotgToFgw,
    FgwToBcg,
}

impl Hop {
    pub const ALL: [Hop; 4] = [Hop::DeviceToOgw, Hop::OgwToIotg, Hop::IotgToFgw, Hop::FgwToBcg];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The hop that delivers into `tier`.
    pub fn into_tier(tier: Tier) -> Hop {
        Hop::ALL[tier.index()]
    }

    pub fn receiver(self) -> Tier {
        Tier::ALL[self.index()]
    }
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hop::DeviceToOgw => "device->OGW",
            Hop::OgwToIotg => "OGW->IoTG",
            Hop::IotgToFgw => "IoTG->FGW",
            Hop::FgwToBcg => "FGW->BCG",
        })
    }
}

/// Device count plus instance counts of the four gateway tiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub devices: usize,
    pub tiers: [GatewayTier; 4],
}

impl Topology {
    pub fn new(devices: usize, ogw: usize, iotg: usize, fgw: usize, bcg: usize) -> Result<Self, ModelError> {
        if devices == 0 {
            return Err(ModelError::NoDevices);
        }
        Ok(Self {
            devices,
            tiers: [
                GatewayTier::new(Tier::Ogw, ogw)?,
                GatewayTier::new(Tier::Iotg, iotg)?,
                GatewayTier::new(Tier::Fgw, fgw)?,
                GatewayTier::new(Tier::Bcg, bcg)?,
            ],
        })
    }

    pub fn instances(&self, tier: Tier) -> usize {
        self.tiers[tier.index()].instance_count()
    }

    /// Sender and receiver index bounds of a hop.
    pub fn bounds(&self, hop: Hop) -> (usize, usize) {
        let receivers = self.instances(hop.receiver());
        let senders = match hop {
            Hop::DeviceToOgw => self.devices,
            _ => self.instances(Tier::ALL[hop.index() - 1]),
        };
        (senders, receivers)
    }
}

/// Packets sent by devices (`mu`), OGW (`theta`), IoTG (`tau`) and FGW
/// (`epsilon_pkts`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrafficCounts {
    pub mu: u64,
    pub theta: u64,
    pub tau: u64,
    pub epsilon_pkts: u64,
}

impl TrafficCounts {
    pub fn new(mu: u64, theta: u64, tau: u64, epsilon_pkts: u64) -> Self {
        Self {
            mu,
            theta,
            tau,
            epsilon_pkts,
        }
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.mu, self.theta, self.tau, self.epsilon_pkts]
    }

    pub fn total(&self) -> u64 {
        self.as_array().iter().sum()
    }
}

impl std::ops::Add for TrafficCounts {
    type Output = TrafficCounts;

    fn add(self, rhs: Self) -> Self {
        Self {
            mu: self.mu + rhs.mu,
            theta: self.theta + rhs.theta,
            tau: self.tau + rhs.tau,
            epsilon_pkts: self.epsilon_pkts + rhs.epsilon_pkts,
        }
    }
}

/// A broken link in the `mu > theta > tau > epsilon` chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("traffic ordering violated: {upper}={upper_value} must exceed {lower}={lower_value}")]
pub struct OrderingViolation {
    pub upper: &'static str,
    pub lower: &'static str,
    pub upper_value: u64,
    pub lower_value: u64,
}

/// Accepts all-zero counts, and otherwise requires each positive count to be
/// strictly below its upstream neighbour. Trailing zeros are allowed.
pub fn validate_traffic_counts(counts: &TrafficCounts) -> Result<(), OrderingViolation> {
    const NAMES: [&str; 4] = ["mu", "theta", "tau", "epsilon"];
    let values = counts.as_array();
    for i in 0..3 {
        let (upper, lower) = (values[i], values[i + 1]);
        if lower > 0 && upper <= lower {
            return Err(OrderingViolation {
                upper: NAMES[i],
                lower: NAMES[i + 1],
                upper_value: upper,
                lower_value: lower,
            });
        }
    }
    Ok(())
}

fn check_non_negative(field: &'static str, values: &[f64; 4]) -> Result<(), ModelError> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::NegativeParameter { field, index, value });
        }
    }
    Ok(())
}

/// Per-packet transmission delay of each hop and per-packet processing
/// latency of each gateway tier, both in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopParams {
    pub omega: [f64; 4],
    pub gw_latency: [f64; 4],
}

impl HopParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_non_negative("omega", &self.omega)?;
        check_non_negative("gw_latency", &self.gw_latency)
    }
}

impl Default for HopParams {
    fn default() -> Self {
        Self {
            omega: [2.0, 1.0, 0.5, 0.5],
            gw_latency: [1.0, 1.5, 2.0, 3.0],
        }
    }
}

/// Joules per byte spent transmitting over each hop (`theta_tx`) and
/// evaluating received bytes at each receiving tier (`omega_rx`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub theta_tx: [f64; 4],
    pub omega_rx: [f64; 4],
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_non_negative("theta_tx", &self.theta_tx)?;
        check_non_negative("omega_rx", &self.omega_rx)
    }
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            theta_tx: [1.0e-3, 6.0e-4, 4.0e-4, 3.0e-4],
            omega_rx: [4.0e-4, 3.0e-4, 3.0e-4, 5.0e-4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByteEntry {
    pub hop: Hop,
    pub sender: usize,
    pub receiver: usize,
    pub bytes: u64,
    pub timestamp: f64,
}

/// Record of every byte transfer, per hop, sender, receiver and time.
#[derive(Debug, Clone, PartialEq)]
pub struct ByteLedger {
    topology: Topology,
    entries: Vec<ByteEntry>,
}

impl ByteLedger {
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            entries: Vec::new(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn record(&mut self, entry: ByteEntry) -> Result<(), ModelError> {
        let (sender_bound, receiver_bound) = self.topology.bounds(entry.hop);
        if entry.sender >= sender_bound || entry.receiver >= receiver_bound {
            return Err(ModelError::IndexOutOfRange {
                hop: entry.hop,
                sender: entry.sender,
                sender_bound,
                receiver: entry.receiver,
                receiver_bound,
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[ByteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total bytes per hop, in hop order.
    pub fn bytes_per_hop(&self) -> [u64; 4] {
        let mut totals = [0u64; 4];
        for entry in &self.entries {
            totals[entry.hop.index()] += entry.bytes;
        }
        totals
    }

    pub fn summary(&self) -> LedgerSummary {
        let mut entries = [0u64; 4];
        for entry in &self.entries {
            entries[entry.hop.index()] += 1;
        }
        LedgerSummary {
            entries,
            bytes: self.bytes_per_hop(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub entries: [u64; 4],
    pub bytes: [u64; 4],
}
