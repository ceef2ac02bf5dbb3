//! Token-based authorization: contracts published on the chain, tokens issued
//! by the blockchain database, key grants from the middleware key server and
//! guarded access to the cloud store.
//!
//! The six protocol steps are driven by [`Protocol`], which sequences them per
//! device and records an ordered [`ProtocolEvent`] trace.

mod db;
mod keys;
mod protocol;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{ChainError, Digest};

pub use db::{find_contract, publish_contract, verify_token, BlockchainDb, DEFAULT_TOKEN_TTL_MS};
pub use keys::{access_data, Cloud, DataRecord, KeyServer};
pub use protocol::{Actor, Protocol, ProtocolEvent, SessionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Publisher {
    ModalityServer,
    Proxy,
    Owner,
}

impl fmt::Display for Publisher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Publisher::ModalityServer => "modality-server",
            Publisher::Proxy => "proxy",
            Publisher::Owner => "owner",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmartContract {
    pub contract_id: String,
    pub publisher: Publisher,
    pub resource: String,
    pub terms: String,
}

impl SmartContract {
    pub fn publication_record(&self) -> Vec<u8> {
        format!("contract:{}:{}:{}", self.contract_id, self.publisher, self.resource).into_bytes()
    }
}

/// Chain-anchored credential. `anchor` is filled once the issuance record
/// has been mined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub token_id: Digest,
    pub device_id: String,
    pub contract_id: String,
    pub nonce: u64,
    pub issued_at: u64,
    pub expires_at: u64,
    pub anchor: Option<u64>,
}

impl Token {
    pub fn derive_id(device_id: &str, contract_id: &str, nonce: u64) -> Digest {
        digest_fields(b"token", &[device_id.as_bytes(), contract_id.as_bytes()], nonce)
    }

    /// The transaction that records issuance on the chain. It binds the
    /// validity window, so altering the window breaks anchoring.
    pub fn issuance_record(&self) -> Vec<u8> {
        format!(
            "token:{}:{}:{}:{}:{}",
            self.token_id, self.device_id, self.contract_id, self.issued_at, self.expires_at
        )
        .into_bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyGrant {
    pub key_id: Digest,
    pub token_id: Digest,
    pub device_id: String,
    pub resource: String,
    pub granted_at: u64,
}

pub(crate) fn digest_fields(tag: &[u8], fields: &[&[u8]], nonce: u64) -> Digest {
    use sha2::{Digest as _, Sha256};
    let mut hasher = Sha256::new();
    hasher.update((tag.len() as u64).to_be_bytes());
    hasher.update(tag);
    for field in fields {
        hasher.update((field.len() as u64).to_be_bytes());
        hasher.update(field);
    }
    hasher.update(nonce.to_be_bytes());
    Digest(hasher.finalize().into())
}

/// Which verification condition rejected a token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("token id does not match its fields")]
    Integrity,
    #[error("chain failed validation: {0}")]
    ChainInvalid(ChainError),
    #[error("token is not anchored in the chain")]
    NotAnchored,
    #[error("token expired at {expires_at} ms (now {now} ms)")]
    Expired { expires_at: u64, now: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forbidden {
    UnknownGrant,
    ResourceMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthzError {
    #[error("contract {0:?} already published")]
    DuplicateContract(String),
    #[error("no contract found for {0:?}")]
    NotFound(String),
    #[error("{count} contracts match resource {resource:?}")]
    Ambiguous { resource: String, count: usize },
    #[error("device {0:?} is inactive")]
    InactiveDevice(String),
    #[error("unknown device {0:?}")]
    UnknownDevice(String),
    #[error("token rejected: {0}")]
    Verification(#[from] VerifyError),
    #[error("token {0} was already redeemed")]
    Replay(Digest),
    #[error("access forbidden: {0:?}")]
    Forbidden(Forbidden),
    #[error("step {step} is out of order for device {device:?}")]
    OutOfOrder { device: String, step: u8 },
}
