use std::collections::{BTreeMap, HashSet};

use super::{digest_fields, verify_token, AuthzError, BlockchainDb, Forbidden, KeyGrant, Token};
use crate::ledger::Digest;

/// Middleware key server. Grants keys only for tokens that verify against
/// the chain at request time.
#[derive(Debug, Clone, Default)]
pub struct KeyServer {
    single_use: bool,
    redeemed: HashSet<Digest>,
    grants: BTreeMap<Digest, KeyGrant>,
    next_nonce: u64,
}

impl KeyServer {
    pub fn new(single_use: bool) -> Self {
        Self {
            single_use,
            ..Self::default()
        }
    }

    pub fn single_use(&self) -> bool {
        self.single_use
    }

    pub fn request_key(&mut self, db: &BlockchainDb, token: &Token, now: u64) -> Result<KeyGrant, AuthzError> {
        verify_token(db, token, now)?;
        if self.single_use && self.redeemed.contains(&token.token_id) {
            return Err(AuthzError::Replay(token.token_id));
        }
        let contract = db
            .contract(&token.contract_id)
            .ok_or_else(|| AuthzError::NotFound(token.contract_id.clone()))?;
        let nonce = self.next_nonce;
        self.next_nonce += 1;
        let grant = KeyGrant {
            key_id: digest_fields(b"key", &[&token.token_id.0], nonce),
            token_id: token.token_id,
            device_id: token.device_id.clone(),
            resource: contract.resource.clone(),
            granted_at: now,
        };
        self.redeemed.insert(token.token_id);
        self.grants.insert(grant.key_id, grant.clone());
        Ok(grant)
    }

    pub fn grant(&self, key_id: &Digest) -> Option<&KeyGrant> {
        self.grants.get(key_id)
    }

    pub fn grants(&self) -> impl Iterator<Item = &KeyGrant> {
        self.grants.values()
    }

    pub fn grant_count(&self) -> usize {
        self.grants.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRecord {
    pub resource: String,
    pub body: Vec<u8>,
}

/// Stub cloud store. Unknown resources serve a placeholder body.
#[derive(Debug, Clone, Default)]
pub struct Cloud {
    records: BTreeMap<String, Vec<u8>>,
}

impl Cloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store(&mut self, resource: impl Into<String>, body: Vec<u8>) {
        self.records.insert(resource.into(), body);
    }

    fn fetch(&self, resource: &str) -> DataRecord {
        DataRecord {
            resource: resource.to_string(),
            body: self
                .records
                .get(resource)
                .cloned()
                .unwrap_or_else(|| format!("data:{resource}").into_bytes()),
        }
    }
}

/// Serves `resource` iff `grant` was issued by `keys` exactly as presented
/// and is bound to that resource.
pub fn access_data(
    cloud: &Cloud,
    keys: &KeyServer,
    grant: &KeyGrant,
    resource: &str,
) -> Result<DataRecord, AuthzError> {
    if keys.grant(&grant.key_id) != Some(grant) {
        return Err(AuthzError::Forbidden(Forbidden::UnknownGrant));
    }
    if grant.resource != resource {
        return Err(AuthzError::Forbidden(Forbidden::ResourceMismatch));
    }
    Ok(cloud.fetch(resource))
}
