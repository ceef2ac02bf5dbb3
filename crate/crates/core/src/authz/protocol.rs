use std::collections::BTreeMap;
use std::fmt;

use super::{
    access_data, find_contract, publish_contract, AuthzError, BlockchainDb, Cloud, DataRecord, KeyGrant, KeyServer,
    Publisher, SmartContract, Token,
};
use crate::model::{IoTNode, ModelError, NodeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Publisher(Publisher),
    Device,
    BlockchainDb,
    KeyServer,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Publisher(p) => write!(f, "{p}"),
            Actor::Device => f.write_str("device"),
            Actor::BlockchainDb => f.write_str("blockchain-db"),
            Actor::KeyServer => f.write_str("key-server"),
        }
    }
}

/// One protocol message. `subject` names the contract, token or key the step
/// produced or consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolEvent {
    pub time: u64,
    pub step: u8,
    pub actor: Actor,
    pub device: String,
    pub subject: String,
    pub outcome: Result<(), String>,
}

impl ProtocolEvent {
    pub fn succeeded(&self) -> bool {
        self.outcome.is_ok()
    }
}

impl fmt::Display for ProtocolEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\tstep-{}\t{}\t{}\t{}\t",
            self.time, self.step, self.actor, self.device, self.subject
        )?;
        match &self.outcome {
            Ok(()) => f.write_str("ok"),
            Err(reason) => write!(f, "error: {reason}"),
        }
    }
}

/// Where a device stands in its authorization flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    Found { contract_id: String },
    Tokened { token: Token },
    Granted { token: Token, grant: KeyGrant },
}

/// Drives the six steps for a set of devices and keeps the ordered trace.
///
/// Per device the steps can only advance: find needs an idle session, token
/// issuance a found contract, a key request a token, and cloud access a
/// grant. Calls made out of order fail with [`AuthzError::OutOfOrder`] and
/// leave no trace.
#[derive(Debug, Clone)]
pub struct Protocol {
    db: BlockchainDb,
    keys: KeyServer,
    cloud: Cloud,
    nodes: NodeSet,
    sessions: BTreeMap<String, SessionState>,
    trace: Vec<ProtocolEvent>,
}

impl Protocol {
    pub fn new(db: BlockchainDb, keys: KeyServer, cloud: Cloud) -> Self {
        Self {
            db,
            keys,
            cloud,
            nodes: NodeSet::new(),
            sessions: BTreeMap::new(),
            trace: Vec::new(),
        }
    }

    pub fn add_device(&mut self, node: IoTNode) -> Result<(), ModelError> {
        let id = node.id().to_string();
        self.nodes.insert(node)?;
        self.sessions.insert(id, SessionState::Idle);
        Ok(())
    }

    pub fn db(&self) -> &BlockchainDb {
        &self.db
    }

    pub fn db_mut(&mut self) -> &mut BlockchainDb {
        &mut self.db
    }

    pub fn keys(&self) -> &KeyServer {
        &self.keys
    }

    pub fn cloud_mut(&mut self) -> &mut Cloud {
        &mut self.cloud
    }

    pub fn trace(&self) -> &[ProtocolEvent] {
        &self.trace
    }

    pub fn session(&self, device: &str) -> Option<&SessionState> {
        self.sessions.get(device)
    }

    fn emit<T, E: fmt::Display>(
        &mut self,
        time: u64,
        step: u8,
        actor: Actor,
        device: &str,
        subject: String,
        result: &Result<T, E>,
    ) {
        self.trace.push(ProtocolEvent {
            time,
            step,
            actor,
            device: device.to_string(),
            subject,
            outcome: result.as_ref().map(|_| ()).map_err(|e| e.to_string()),
        });
    }

    fn state(&self, device: &str) -> Result<&SessionState, AuthzError> {
        self.sessions
            .get(device)
            .ok_or_else(|| AuthzError::UnknownDevice(device.to_string()))
    }

    /// Step 1.
    pub fn publish(&mut self, contract: SmartContract, now: u64) -> Result<String, AuthzError> {
        let actor = Actor::Publisher(contract.publisher);
        let subject = contract.contract_id.clone();
        let result = publish_contract(&mut self.db, contract);
        self.emit(now, 1, actor, "-", subject, &result);
        result
    }

    /// Step 2.
    pub fn find(&mut self, device: &str, resource: &str, now: u64) -> Result<String, AuthzError> {
        if *self.state(device)? != SessionState::Idle {
            return Err(out_of_order(device, 2));
        }
        let result = find_contract(&self.db, resource).map(|c| c.contract_id.clone());
        let subject = result.clone().unwrap_or_else(|_| resource.to_string());
        self.emit(now, 2, Actor::Device, device, subject, &result);
        if let Ok(contract_id) = &result {
            self.sessions.insert(
                device.to_string(),
                SessionState::Found {
                    contract_id: contract_id.clone(),
                },
            );
        }
        result
    }

    /// Step 3.
    pub fn issue(&mut self, device: &str, now: u64) -> Result<Token, AuthzError> {
        let SessionState::Found { contract_id } = self.state(device)?.clone() else {
            return Err(out_of_order(device, 3));
        };
        let node = self
            .nodes
            .by_id(device)
            .ok_or_else(|| AuthzError::UnknownDevice(device.to_string()))?;
        let result = self.db.issue_token(node, &contract_id, now);
        let subject = match &result {
            Ok(token) => token.token_id.to_hex(),
            Err(_) => contract_id,
        };
        self.emit(now, 3, Actor::BlockchainDb, device, subject, &result);
        if let Ok(token) = &result {
            self.sessions
                .insert(device.to_string(), SessionState::Tokened { token: token.clone() });
        }
        result
    }

    /// Steps 4 and 5: the device presents its token, the key server verifies
    /// it against the chain and grants a key.
    pub fn request_key(&mut self, device: &str, now: u64) -> Result<KeyGrant, AuthzError> {
        let mut token = match self.state(device)? {
            SessionState::Tokened { token } | SessionState::Granted { token, .. } => token.clone(),
            _ => return Err(out_of_order(device, 4)),
        };
        self.db.anchor(&mut token);
        let subject = token.token_id.to_hex();
        self.emit::<(), AuthzError>(now, 4, Actor::Device, device, subject.clone(), &Ok(()));
        let result = self.keys.request_key(&self.db, &token, now);
        let subject = result.as_ref().map(|g| g.key_id.to_hex()).unwrap_or(subject);
        self.emit(now, 5, Actor::KeyServer, device, subject, &result);
        let next = match &result {
            Ok(grant) => SessionState::Granted {
                token,
                grant: grant.clone(),
            },
            Err(_) => match self.sessions.remove(device) {
                Some(SessionState::Granted { grant, .. }) => SessionState::Granted { token, grant },
                _ => SessionState::Tokened { token },
            },
        };
        self.sessions.insert(device.to_string(), next);
        result
    }

    /// Step 6.
    pub fn access(&mut self, device: &str, resource: &str, now: u64) -> Result<DataRecord, AuthzError> {
        let SessionState::Granted { grant, .. } = self.state(device)?.clone() else {
            return Err(out_of_order(device, 6));
        };
        let result = access_data(&self.cloud, &self.keys, &grant, resource);
        self.emit(now, 6, Actor::Device, device, resource.to_string(), &result);
        result
    }
}

fn out_of_order(device: &str, step: u8) -> AuthzError {
    AuthzError::OutOfOrder {
        device: device.to_string(),
        step,
    }
}
