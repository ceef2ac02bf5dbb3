use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::Rng;

use super::config::SimConfig;
use super::dist::Dist;
use super::report::{HopStats, SessionOutcome, SessionStatus, SimReport};
use super::rng::Streams;
use super::trace::TraceEvent;
use super::SimError;
use crate::authz::{BlockchainDb, Cloud, KeyServer, Protocol, Publisher, SmartContract};
use crate::ledger::{select_miner, validate_chain, Miner, MinerError};
use crate::metrics::{mean_transmission_latency, EnergyReport};
use crate::model::{
    new_iot_node, validate_traffic_counts, ByteEntry, ByteLedger, Hop, IoTNode, Location, Tier, Topology, TrafficCounts,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub packet_id: u64,
    /// Index of the originating device.
    pub source: usize,
    pub length: u64,
    pub created_at: f64,
    pub retries_remaining: u32,
    /// The hop the packet is currently crossing.
    pub hop: Hop,
}

impl Packet {
    pub fn transaction(&self, source_id: &str) -> Vec<u8> {
        format!(
            "pkt:{}:{}:{}:{}",
            self.packet_id, source_id, self.length, self.created_at
        )
        .into_bytes()
    }
}

/// Creates the next packet of an active node; inactive nodes generate
/// nothing.
pub fn generate_packet<R: Rng + ?Sized>(
    node: &IoTNode,
    source: usize,
    packet_id: u64,
    now: f64,
    length_dist: &Dist,
    retransmission_limit: u32,
    rng: &mut R,
) -> Option<Packet> {
    node.is_active().then(|| Packet {
        packet_id,
        source,
        length: length_dist.sample_bytes(rng),
        created_at: now,
        retries_remaining: retransmission_limit,
        hop: Hop::DeviceToOgw,
    })
}

/// Single service channel of a gateway instance. There is no queue.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Channel {
    pub busy_until: f64,
}

impl Channel {
    pub fn is_busy(&self, now: f64) -> bool {
        self.busy_until > now
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceOutcome {
    /// Channel taken; the packet leaves the gateway at `done_at`.
    Forwarded {
        done_at: f64,
        service_time: f64,
    },
    /// Channel busy; one retry used, next attempt at `retry_at`.
    Requeued {
        retry_at: f64,
    },
    Dropped,
}

pub fn service_packet<R: Rng + ?Sized>(
    channel: &mut Channel,
    packet: &mut Packet,
    now: f64,
    service_dist: &Dist,
    backoff: f64,
    rng: &mut R,
) -> ServiceOutcome {
    if !channel.is_busy(now) {
        let service_time = service_dist.sample(rng);
        channel.busy_until = now + service_time;
        ServiceOutcome::Forwarded {
            done_at: channel.busy_until,
            service_time,
        }
    } else if packet.retries_remaining > 0 {
        packet.retries_remaining -= 1;
        ServiceOutcome::Requeued {
            retry_at: now + backoff,
        }
    } else {
        ServiceOutcome::Dropped
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinedBlock {
    pub index: u64,
    pub miner: String,
    pub tx_count: usize,
}

/// Mines one block of exactly `tx_per_block` pending transactions (oldest
/// first) if that many are waiting. The winner is drawn by fog demand.
pub fn mining_tick<R: Rng + ?Sized>(
    db: &mut BlockchainDb,
    miners: &[Miner],
    tx_per_block: usize,
    rng: &mut R,
    now: u64,
) -> Result<Option<MinedBlock>, MinerError> {
    if tx_per_block == 0 || db.pending_len() < tx_per_block {
        return Ok(None);
    }
    let miner = select_miner(miners, rng)?.id.clone();
    let block = db.mine_pending(tx_per_block, now).expect("enough pending transactions");
    Ok(Some(MinedBlock {
        index: block.index,
        miner,
        tx_count: block.payload.len(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SimTime(f64);

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug)]
enum Event {
    Generate {
        device: usize,
        tick: u64,
    },
    Retry {
        packet: Packet,
        sender: usize,
        receiver: usize,
    },
    Complete {
        packet: Packet,
        sender: usize,
        receiver: usize,
    },
    MiningTick,
    SessionStart {
        session: usize,
    },
}

#[derive(Debug)]
struct Scheduled {
    key: Reverse<(SimTime, u64)>,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

#[derive(Debug, Clone)]
struct Session {
    device: String,
    resource: String,
    status: SessionStatus,
}

/// Single-threaded event loop for one run. Events run in (time, insertion
/// order); everything at or before `duration` executes.
pub struct Kernel {
    config: SimConfig,
    topology: Topology,
    nodes: Vec<IoTNode>,
    channels: [Vec<Channel>; 4],
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: f64,
    streams: Streams,
    ledger: ByteLedger,
    protocol: Protocol,
    hops: [HopStats; 4],
    generated: u64,
    delivered: u64,
    busy_time: f64,
    next_packet_id: u64,
    miner_wins: Vec<u64>,
    sessions: Vec<Session>,
    trace: Option<Vec<TraceEvent>>,
}

impl Kernel {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let topology = config.topology()?;
        let nodes = (0..config.n_devices)
            .map(|i| {
                new_iot_node(
                    format!("dev-{i}"),
                    1,
                    ["reading"],
                    Location::default(),
                    "sensor",
                    "telemetry",
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut protocol = Protocol::new(
            BlockchainDb::new(config.difficulty, config.token_ttl),
            KeyServer::new(config.single_use_tokens),
            Cloud::new(),
        );
        for node in &nodes {
            protocol.add_device(node.clone())?;
        }
        let channels = Tier::ALL.map(|t| vec![Channel::default(); topology.instances(t)]);
        Ok(Self {
            streams: Streams::new(config.seed),
            ledger: ByteLedger::new(topology),
            miner_wins: vec![0; config.miners.len()],
            topology,
            nodes,
            channels,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            protocol,
            hops: Default::default(),
            generated: 0,
            delivered: 0,
            busy_time: 0.0,
            next_packet_id: 0,
            sessions: Vec::new(),
            trace: None,
            config,
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    fn schedule(&mut self, time: f64, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled {
            key: Reverse((SimTime(time), self.seq)),
            event,
        });
    }

    fn record(
        &mut self,
        kind: &'static str,
        actor: impl FnOnce() -> String,
        subject: impl FnOnce() -> String,
        outcome: &str,
    ) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent {
                time: self.now,
                kind,
                actor: actor(),
                subject: subject(),
                outcome: outcome.to_string(),
            });
        }
    }

    fn phase(&self, device: usize) -> f64 {
        self.config.period * device as f64 / self.config.n_devices as f64
    }

    fn gateway_name(tier: Tier, instance: usize) -> String {
        format!("{tier}-{instance}")
    }

    fn sender_name(&self, hop: Hop, sender: usize) -> String {
        match hop {
            Hop::DeviceToOgw => self.nodes[sender].id().to_string(),
            _ => Self::gateway_name(Tier::ALL[hop.index() - 1], sender),
        }
    }

    pub fn run(self) -> SimReport {
        self.run_inner().0
    }

    pub fn run_with_trace(self) -> (SimReport, Vec<TraceEvent>) {
        let (report, trace) = self.with_trace().run_inner();
        (report, trace.unwrap_or_default())
    }

    fn run_inner(mut self) -> (SimReport, Option<Vec<TraceEvent>>) {
        let started = Instant::now();
        let duration = self.config.duration;
        for device in 0..self.nodes.len() {
            let first = self.phase(device) + self.config.period;
            if first <= duration {
                self.schedule(first, Event::Generate { device, tick: 1 });
            }
        }
        let interval = self.config.mining_interval as f64;
        if interval <= duration {
            self.schedule(interval, Event::MiningTick);
        }
        for session in 0..self.config.protocol_sessions {
            let start = ((session as u64 + 1) * self.config.mining_interval) as f64;
            if start <= duration {
                self.schedule(start, Event::SessionStart { session });
            }
        }

        while let Some(top) = self.queue.peek() {
            let Reverse((SimTime(time), _)) = top.key;
            if time > duration {
                break;
            }
            let scheduled = self.queue.pop().expect("peeked");
            self.now = time;
            match scheduled.event {
                Event::Generate { device, tick } => self.on_generate(device, tick),
                Event::Retry {
                    packet,
                    sender,
                    receiver,
                } => self.attempt(packet, sender, receiver, true),
                Event::Complete {
                    packet,
                    sender,
                    receiver,
                } => self.on_complete(packet, sender, receiver),
                Event::MiningTick => self.on_mining_tick(),
                Event::SessionStart { session } => self.on_session_start(session),
            }
        }

        for scheduled in self.queue.drain() {
            match scheduled.event {
                Event::Complete { packet, .. } => self.hops[packet.hop.index()].in_service += 1,
                Event::Retry { packet, .. } => self.hops[packet.hop.index()].pending_retries += 1,
                _ => {}
            }
        }
        let wall_clock_s = started.elapsed().as_secs_f64();
        let report = self.build_report(wall_clock_s);
        (report, self.trace)
    }

    fn on_generate(&mut self, device: usize, tick: u64) {
        let packet_id = self.next_packet_id;
        let Some(packet) = generate_packet(
            &self.nodes[device],
            device,
            packet_id,
            self.now,
            &self.config.length_dist,
            self.config.retransmission_limit,
            &mut self.streams.lengths,
        ) else {
            return;
        };
        self.next_packet_id += 1;
        self.generated += 1;
        let node_id = self.nodes[device].id().to_string();
        self.record(
            "generate",
            || node_id,
            || format!("pkt-{packet_id}"),
            &format!("{}B", packet.length),
        );

        let receiver = device % self.topology.instances(Tier::Ogw);
        self.attempt(packet, device, receiver, false);

        let next = if self.config.saturated {
            let free = self.channels[Tier::Ogw.index()][receiver].busy_until;
            if free > self.now {
                free
            } else {
                self.now + self.config.period
            }
        } else {
            self.phase(device) + (tick + 1) as f64 * self.config.period
        };
        if next <= self.config.duration {
            self.schedule(next, Event::Generate { device, tick: tick + 1 });
        }
    }

    fn attempt(&mut self, mut packet: Packet, sender: usize, receiver: usize, retry: bool) {
        let hop = packet.hop;
        let stats = &mut self.hops[hop.index()];
        if retry {
            stats.retransmissions += 1;
        } else {
            stats.offered += 1;
        }
        let channel = &mut self.channels[hop.receiver().index()][receiver];
        let outcome = service_packet(
            channel,
            &mut packet,
            self.now,
            &self.config.service_dist,
            self.config.period,
            &mut self.streams.service,
        );
        let gateway = || Self::gateway_name(hop.receiver(), receiver);
        let subject = format!("pkt-{}", packet.packet_id);
        match outcome {
            ServiceOutcome::Forwarded { done_at, service_time } => {
                self.busy_time += service_time;
                self.record(
                    "serve",
                    gateway,
                    || subject,
                    if retry { "retransmitted" } else { "accepted" },
                );
                self.schedule(
                    done_at,
                    Event::Complete {
                        packet,
                        sender,
                        receiver,
                    },
                );
            }
            ServiceOutcome::Requeued { retry_at } => {
                self.hops[hop.index()].backoffs += 1;
                self.record(
                    "backoff",
                    gateway,
                    || subject,
                    &format!("retries-left={}", packet.retries_remaining),
                );
                self.schedule(
                    retry_at,
                    Event::Retry {
                        packet,
                        sender,
                        receiver,
                    },
                );
            }
            ServiceOutcome::Dropped => {
                self.hops[hop.index()].drops += 1;
                self.record("drop", gateway, || subject, "busy");
            }
        }
    }

    fn on_complete(&mut self, mut packet: Packet, sender: usize, receiver: usize) {
        let hop = packet.hop;
        self.hops[hop.index()].completed += 1;
        self.ledger
            .record(ByteEntry {
                hop,
                sender,
                receiver,
                bytes: packet.length,
                timestamp: self.now,
            })
            .expect("routing stays within tier bounds");
        let sender_name = self.sender_name(hop, sender);
        let subject = format!("pkt-{}", packet.packet_id);
        let tier = hop.receiver();
        match tier.next() {
            None => {
                self.delivered += 1;
                let tx = packet.transaction(self.nodes[packet.source].id());
                self.protocol.db_mut().enqueue(tx);
                self.record(
                    "deliver",
                    || sender_name,
                    || subject,
                    &Self::gateway_name(tier, receiver),
                );
            }
            Some(next) => {
                let ratio = self.config.aggregation_ratio;
                let forward = ratio >= 1.0 || self.streams.forwarding.random::<f64>() < ratio;
                if forward {
                    packet.hop = Hop::into_tier(next);
                    packet.retries_remaining = self.config.retransmission_limit;
                    let next_receiver = receiver % self.topology.instances(next);
                    self.record(
                        "forward",
                        || sender_name,
                        || subject,
                        &Self::gateway_name(tier, receiver),
                    );
                    self.attempt(packet, receiver, next_receiver, false);
                } else {
                    self.hops[hop.index()].aggregated += 1;
                    self.record(
                        "aggregate",
                        || Self::gateway_name(tier, receiver),
                        || subject,
                        "absorbed",
                    );
                }
            }
        }
    }

    fn on_mining_tick(&mut self) {
        let now = self.now as u64;
        let mined = mining_tick(
            self.protocol.db_mut(),
            &self.config.miners,
            self.config.tx_per_block,
            &mut self.streams.selection,
            now,
        )
        .expect("miners validated with config");
        if let Some(block) = mined {
            let winner = self
                .config
                .miners
                .iter()
                .position(|m| m.id == block.miner)
                .expect("winner comes from the miner list");
            self.miner_wins[winner] += 1;
            let miner = block.miner.clone();
            self.record(
                "mine",
                || miner,
                || format!("block-{}", block.index),
                &format!("{} tx", block.tx_count),
            );
            self.advance_sessions(now);
        }
        let next = self.now + self.config.mining_interval as f64;
        if next <= self.config.duration {
            self.schedule(next, Event::MiningTick);
        }
    }

    fn sync_protocol_trace(&mut self, seen: usize) {
        let Some(trace) = &mut self.trace else {
            return;
        };
        for event in &self.protocol.trace()[seen..] {
            trace.push(TraceEvent {
                time: self.now,
                kind: "authz",
                actor: event.actor.to_string(),
                subject: format!("step-{}:{}:{}", event.step, event.device, event.subject),
                outcome: match &event.outcome {
                    Ok(()) => "ok".to_string(),
                    Err(reason) => format!("error: {reason}"),
                },
            });
        }
    }

    fn on_session_start(&mut self, session: usize) {
        let now = self.now as u64;
        let seen = self.protocol.trace().len();
        let device = self.nodes[session].id().to_string();
        let resource = format!("resource-{session}");
        let publisher = [Publisher::ModalityServer, Publisher::Proxy, Publisher::Owner][session % 3];
        let contract = SmartContract {
            contract_id: format!("contract-{session}"),
            publisher,
            resource: resource.clone(),
            terms: "read".into(),
        };
        let result = self
            .protocol
            .publish(contract, now)
            .map_err(|e| (1, e))
            .and_then(|_| self.protocol.find(&device, &resource, now).map_err(|e| (2, e)))
            .and_then(|_| self.protocol.issue(&device, now).map_err(|e| (3, e)));
        let status = match result {
            Ok(_) => SessionStatus::AwaitingAnchor,
            Err((step, e)) => SessionStatus::Failed {
                step,
                reason: e.to_string(),
            },
        };
        self.sessions.push(Session {
            device,
            resource,
            status,
        });
        self.sync_protocol_trace(seen);
    }

    fn advance_sessions(&mut self, now: u64) {
        let seen = self.protocol.trace().len();
        for i in 0..self.sessions.len() {
            if self.sessions[i].status != SessionStatus::AwaitingAnchor {
                continue;
            }
            let device = self.sessions[i].device.clone();
            let anchored = match self.protocol.session(&device) {
                Some(crate::authz::SessionState::Tokened { token }) => {
                    self.protocol.db().locate(&token.issuance_record()).is_some()
                }
                _ => false,
            };
            if !anchored {
                continue;
            }
            let resource = self.sessions[i].resource.clone();
            let result = self
                .protocol
                .request_key(&device, now)
                .map_err(|e| (5, e))
                .and_then(|_| self.protocol.access(&device, &resource, now).map_err(|e| (6, e)));
            self.sessions[i].status = match result {
                Ok(_) => SessionStatus::Completed { at: now },
                Err((step, e)) => SessionStatus::Failed {
                    step,
                    reason: e.to_string(),
                },
            };
        }
        self.sync_protocol_trace(seen);
    }

    fn build_report(&self, wall_clock_s: f64) -> SimReport {
        let hop_sends = self.hops.map(|h| h.offered);
        let traffic = TrafficCounts::new(hop_sends[0], hop_sends[1], hop_sends[2], hop_sends[3]);
        let latency = mean_transmission_latency(&traffic, &self.config.hop_params);
        let energy = EnergyReport::new(&self.ledger, &self.config.energy_params, self.config.duration)
            .expect("duration validated > 0");
        let chain = self.protocol.db().chain();
        SimReport {
            traffic,
            ordering_warning: validate_traffic_counts(&traffic).err().map(|v| v.to_string()),
            ledger: self.ledger.summary(),
            hops: self.hops,
            generated: self.generated,
            delivered: self.delivered,
            aggregated: self.hops.iter().map(|h| h.aggregated).sum(),
            sigma: latency.sigma,
            sigma_per_packet: latency.per_packet(&traffic),
            phi_t: energy.phi_t,
            delta_fog: energy.delta_fog,
            drops: self.hops.iter().map(|h| h.drops).sum(),
            retransmissions: self.hops.iter().map(|h| h.retransmissions).sum(),
            blocks_mined: chain.len() as u64 - 1,
            chain_bytes: chain.serialized_len() as u64,
            chain_valid: validate_chain(chain).is_ok(),
            pending_transactions: self.protocol.db().pending_len() as u64,
            miner_wins: self
                .config
                .miners
                .iter()
                .zip(&self.miner_wins)
                .map(|(m, &wins)| (m.id.clone(), wins))
                .collect(),
            busy_time_ms: self.busy_time,
            action_duration_s: self.busy_time / 1000.0,
            wall_clock_s,
            sessions: self
                .sessions
                .iter()
                .enumerate()
                .map(|(i, s)| SessionOutcome {
                    session: i,
                    device: s.device.clone(),
                    status: s.status.clone(),
                })
                .collect(),
            protocol_events: self.protocol.trace().to_vec(),
        }
    }
}
