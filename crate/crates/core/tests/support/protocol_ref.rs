//! Reference interpreter for the authorization protocol and an exhaustive,
//! memoized explorer that drives the real [`Protocol`] alongside it.

use std::collections::HashMap;

use fogchain::authz::{
    verify_token, AuthzError, BlockchainDb, Cloud, KeyServer, Protocol, ProtocolEvent, Publisher, SessionState,
    SmartContract, VerifyError,
};
use fogchain::model::{new_iot_node, Location};

#[derive(Debug, Clone)]
pub struct DeviceSpec {
    pub id: &'static str,
    pub active: bool,
    pub resource: &'static str,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub devices: Vec<DeviceSpec>,
    /// (contract id, resource)
    pub contracts: Vec<(&'static str, &'static str)>,
    pub single_use: bool,
}

pub const TTL: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Publish(usize),
    Find(usize),
    Issue(usize),
    Mine,
    Request(usize),
    Access(usize),
    /// Moves the clock forward by one token lifetime.
    AdvanceTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ok,
    Duplicate,
    NotFound,
    Ambiguous,
    Inactive,
    OutOfOrder,
    NotAnchored,
    Expired,
    Replay,
    Rejected,
}

fn classify<T>(result: &Result<T, AuthzError>) -> Outcome {
    match result {
        Ok(_) => Outcome::Ok,
        Err(AuthzError::DuplicateContract(_)) => Outcome::Duplicate,
        Err(AuthzError::NotFound(_)) => Outcome::NotFound,
        Err(AuthzError::Ambiguous { .. }) => Outcome::Ambiguous,
        Err(AuthzError::InactiveDevice(_)) => Outcome::Inactive,
        Err(AuthzError::OutOfOrder { .. }) => Outcome::OutOfOrder,
        Err(AuthzError::Verification(VerifyError::NotAnchored)) => Outcome::NotAnchored,
        Err(AuthzError::Verification(VerifyError::Expired { .. })) => Outcome::Expired,
        Err(AuthzError::Replay(_)) => Outcome::Replay,
        Err(_) => Outcome::Rejected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenState {
    pub contract: usize,
    pub epoch: u64,
    pub anchored: bool,
    pub redeemed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    Found(usize),
    Tokened(TokenState),
    Granted(TokenState),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeviceState {
    pub phase: Phase,
    pub grants: u32,
    pub accesses: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RefState {
    pub published: Vec<bool>,
    pub devices: Vec<DeviceState>,
    pub pending: usize,
    pub blocks: usize,
    pub epoch: u64,
}

impl RefState {
    pub fn initial(s: &Scenario) -> Self {
        Self {
            published: vec![false; s.contracts.len()],
            devices: vec![
                DeviceState {
                    phase: Phase::Idle,
                    grants: 0,
                    accesses: 0,
                };
                s.devices.len()
            ],
            pending: 0,
            blocks: 0,
            epoch: 0,
        }
    }

    /// Applies `action` following the protocol rules directly.
    pub fn step(&mut self, s: &Scenario, action: Action) -> Outcome {
        match action {
            Action::Publish(c) => {
                if self.published[c] {
                    return Outcome::Duplicate;
                }
                self.published[c] = true;
                self.pending += 1;
                Outcome::Ok
            }
            Action::Find(d) => {
                if self.devices[d].phase != Phase::Idle {
                    return Outcome::OutOfOrder;
                }
                let matches: Vec<usize> = (0..s.contracts.len())
                    .filter(|&c| self.published[c] && s.contracts[c].1 == s.devices[d].resource)
                    .collect();
                match matches.as_slice() {
                    [] => Outcome::NotFound,
                    [c] => {
                        self.devices[d].phase = Phase::Found(*c);
                        Outcome::Ok
                    }
                    _ => Outcome::Ambiguous,
                }
            }
            Action::Issue(d) => {
                let Phase::Found(contract) = self.devices[d].phase else {
                    return Outcome::OutOfOrder;
                };
                if !s.devices[d].active {
                    return Outcome::Inactive;
                }
                self.devices[d].phase = Phase::Tokened(TokenState {
                    contract,
                    epoch: self.epoch,
                    anchored: false,
                    redeemed: false,
                });
                self.pending += 1;
                Outcome::Ok
            }
            Action::Mine => {
                if self.pending > 0 {
                    self.pending = 0;
                    self.blocks += 1;
                    for dev in &mut self.devices {
                        if let Phase::Tokened(t) | Phase::Granted(t) = &mut dev.phase {
                            t.anchored = true;
                        }
                    }
                }
                Outcome::Ok
            }
            Action::Request(d) => {
                let dev = &mut self.devices[d];
                let (Phase::Tokened(mut t) | Phase::Granted(mut t)) = dev.phase else {
                    return Outcome::OutOfOrder;
                };
                if !t.anchored {
                    return Outcome::NotAnchored;
                }
                if self.epoch > t.epoch {
                    return Outcome::Expired;
                }
                if s.single_use && t.redeemed {
                    return Outcome::Replay;
                }
                t.redeemed = true;
                dev.grants += 1;
                dev.phase = Phase::Granted(t);
                Outcome::Ok
            }
            Action::Access(d) => {
                let dev = &mut self.devices[d];
                let Phase::Granted(_) = dev.phase else {
                    return Outcome::OutOfOrder;
                };
                dev.accesses += 1;
                Outcome::Ok
            }
            Action::AdvanceTime => {
                self.epoch += 1;
                Outcome::Ok
            }
        }
    }
}

/// The real implementation plus its clock.
#[derive(Clone)]
pub struct World {
    pub protocol: Protocol,
    pub now: u64,
}

impl World {
    pub fn new(s: &Scenario) -> Self {
        let mut protocol = Protocol::new(BlockchainDb::new(1, TTL), KeyServer::new(s.single_use), Cloud::new());
        for d in &s.devices {
            let node = new_iot_node(d.id, d.active as u8, ["reading"], Location::default(), "", "").unwrap();
            protocol.add_device(node).unwrap();
        }
        Self { protocol, now: 0 }
    }

    pub fn step(&mut self, s: &Scenario, action: Action) -> Result<Outcome, String> {
        let now = self.now;
        let p = &mut self.protocol;
        Ok(match action {
            Action::Publish(c) => {
                let (id, resource) = s.contracts[c];
                classify(&p.publish(
                    SmartContract {
                        contract_id: id.into(),
                        publisher: Publisher::Owner,
                        resource: resource.into(),
                        terms: String::new(),
                    },
                    now,
                ))
            }
            Action::Find(d) => classify(&p.find(s.devices[d].id, s.devices[d].resource, now)),
            Action::Issue(d) => classify(&p.issue(s.devices[d].id, now)),
            Action::Mine => {
                let pending = p.db().pending_len();
                p.db_mut().mine_pending(pending, now);
                Outcome::Ok
            }
            Action::Request(d) => {
                let device = s.devices[d].id;
                let presented = match p.session(device) {
                    Some(SessionState::Tokened { token } | SessionState::Granted { token, .. }) => {
                        let mut token = token.clone();
                        p.db().anchor(&mut token);
                        Some(token)
                    }
                    _ => None,
                };
                let verified = presented.as_ref().map(|t| verify_token(p.db(), t, now).is_ok());
                let result = p.request_key(device, now);
                if result.is_ok() && verified != Some(true) {
                    return Err(format!("key granted to {device} without a verified token"));
                }
                classify(&result)
            }
            Action::Access(d) => classify(&p.access(s.devices[d].id, s.devices[d].resource, now)),
            Action::AdvanceTime => {
                self.now += TTL;
                Outcome::Ok
            }
        })
    }

    /// Abstracts the implementation state into the reference vocabulary.
    pub fn project(&self, s: &Scenario) -> RefState {
        let p = &self.protocol;
        let db = p.db();
        let contract_index = |id: &str| s.contracts.iter().position(|c| c.0 == id).expect("known contract");
        let token_state = |token: &fogchain::authz::Token| TokenState {
            contract: contract_index(&token.contract_id),
            epoch: token.issued_at / TTL,
            anchored: db.locate(&token.issuance_record()).is_some(),
            redeemed: p.keys().grants().any(|g| g.token_id == token.token_id),
        };
        let devices = s
            .devices
            .iter()
            .map(|d| {
                let phase = match p.session(d.id).expect("registered device") {
                    SessionState::Idle => Phase::Idle,
                    SessionState::Found { contract_id } => Phase::Found(contract_index(contract_id)),
                    SessionState::Tokened { token } => Phase::Tokened(token_state(token)),
                    SessionState::Granted { token, .. } => Phase::Granted(token_state(token)),
                };
                DeviceState {
                    phase,
                    grants: p.keys().grants().filter(|g| g.device_id == d.id).count() as u32,
                    accesses: p
                        .trace()
                        .iter()
                        .filter(|e| e.step == 6 && e.device == d.id && e.succeeded())
                        .count() as u32,
                }
            })
            .collect();
        RefState {
            published: s.contracts.iter().map(|c| db.contract(c.0).is_some()).collect(),
            devices,
            pending: db.pending_len(),
            blocks: db.chain().len() - 1,
            epoch: self.now / TTL,
        }
    }
}

/// Checks per-device step order in a protocol trace and that every key
/// grant follows a token presentation for the same device.
pub fn check_trace(trace: &[ProtocolEvent]) -> Result<(), String> {
    let mut published = Vec::new();
    let mut progress: HashMap<&str, u8> = HashMap::new();
    for (i, e) in trace.iter().enumerate() {
        let reached = progress.get(e.device.as_str()).copied().unwrap_or(0);
        let fail = |what: &str| Err(format!("event {i} ({e}): {what}"));
        match e.step {
            1 => {
                if e.succeeded() {
                    published.push(e.subject.as_str());
                }
            }
            2 => {
                if e.succeeded() && !published.contains(&e.subject.as_str()) {
                    return fail("found an unpublished contract");
                }
                if e.succeeded() {
                    progress.insert(&e.device, 2);
                }
            }
            3 => {
                if reached < 2 {
                    return fail("token issued before a contract was found");
                }
                if e.succeeded() {
                    progress.insert(&e.device, reached.max(3));
                }
            }
            4 => {
                if reached < 3 {
                    return fail("token presented before issuance");
                }
            }
            5 => {
                let prev = i.checked_sub(1).map(|j| &trace[j]);
                if !prev.is_some_and(|p| p.step == 4 && p.device == e.device) {
                    return fail("key server answered without a presented token");
                }
                if e.succeeded() {
                    progress.insert(&e.device, 5);
                }
            }
            6 => {
                if reached < 5 {
                    return fail("cloud access before a key grant");
                }
            }
            _ => return fail("unknown step"),
        }
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Exploration {
    pub states: usize,
    pub transitions: usize,
}

pub fn alphabet(s: &Scenario) -> Vec<Action> {
    let mut actions: Vec<Action> = (0..s.contracts.len()).map(Action::Publish).collect();
    for d in 0..s.devices.len() {
        actions.extend([Action::Find(d), Action::Issue(d), Action::Request(d), Action::Access(d)]);
    }
    actions.extend([Action::Mine, Action::AdvanceTime]);
    actions
}

/// Every action sequence up to `depth`, memoized on the reference state.
/// Each transition compares outcome and projected state with the reference.
pub fn explore(s: &Scenario, depth: usize) -> Result<Exploration, String> {
    let actions = alphabet(s);
    let mut memo: HashMap<RefState, usize> = HashMap::new();
    let mut stats = Exploration::default();
    let mut path = Vec::new();
    dfs(
        s,
        &actions,
        World::new(s),
        RefState::initial(s),
        depth,
        &mut memo,
        &mut stats,
        &mut path,
    )?;
    stats.states = memo.len();
    Ok(stats)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    s: &Scenario,
    actions: &[Action],
    world: World,
    reference: RefState,
    remaining: usize,
    memo: &mut HashMap<RefState, usize>,
    stats: &mut Exploration,
    path: &mut Vec<Action>,
) -> Result<(), String> {
    match memo.get(&reference) {
        Some(&seen) if seen >= remaining => return Ok(()),
        _ => {
            memo.insert(reference.clone(), remaining);
        }
    }
    if remaining == 0 {
        return Ok(());
    }
    for &action in actions {
        let mut w = world.clone();
        let mut r = reference.clone();
        path.push(action);
        let got = w.step(s, action).map_err(|e| format!("{e} after {path:?}"))?;
        let want = r.step(s, action);
        stats.transitions += 1;
        if got != want {
            return Err(format!("outcome {got:?}, reference {want:?} after {path:?}"));
        }
        let projected = w.project(s);
        if projected != r {
            return Err(format!("state {projected:?}, reference {r:?} after {path:?}"));
        }
        check_trace(w.protocol.trace()).map_err(|e| format!("{e} after {path:?}"))?;
        dfs(s, actions, w, r, remaining - 1, memo, stats, path)?;
        path.pop();
    }
    Ok(())
}

pub fn scenarios() -> Vec<(&'static str, Scenario)> {
    let three = vec![
        DeviceSpec {
            id: "d0",
            active: true,
            resource: "A",
        },
        DeviceSpec {
            id: "d1",
            active: true,
            resource: "B",
        },
        DeviceSpec {
            id: "d2",
            active: false,
            resource: "A",
        },
    ];
    vec![
        (
            "three devices, reusable tokens",
            Scenario {
                devices: three.clone(),
                contracts: vec![("c0", "A"), ("c1", "B")],
                single_use: false,
            },
        ),
        (
            "three devices, single-use tokens",
            Scenario {
                devices: three,
                contracts: vec![("c0", "A"), ("c1", "B")],
                single_use: true,
            },
        ),
        (
            "two contracts on one resource",
            Scenario {
                devices: vec![
                    DeviceSpec {
                        id: "d0",
                        active: true,
                        resource: "A",
                    },
                    DeviceSpec {
                        id: "d1",
                        active: true,
                        resource: "A",
                    },
                ],
                contracts: vec![("c0", "A"), ("c1", "A")],
                single_use: false,
            },
        ),
    ]
}
