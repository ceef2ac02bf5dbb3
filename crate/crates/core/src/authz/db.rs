use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{AuthzError, SmartContract, Token, VerifyError};
use crate::ledger::{mine_block, validate_chain, Block, Chain, Transaction};
use crate::model::IoTNode;

pub const DEFAULT_TOKEN_TTL_MS: u64 = 60_000;

/// The authorized blockchain database: the chain, the FIFO of transactions
/// waiting to be mined, the contract registry and an index from transaction
/// record to the block holding it.
#[derive(Debug, Clone)]
pub struct BlockchainDb {
    chain: Chain,
    pending: VecDeque<Transaction>,
    contracts: BTreeMap<String, SmartContract>,
    tx_index: HashMap<Transaction, u64>,
    token_ttl: u64,
    next_token_nonce: u64,
}

impl BlockchainDb {
    pub fn new(difficulty: u32, token_ttl: u64) -> Self {
        Self {
            chain: Chain::new(difficulty),
            pending: VecDeque::new(),
            contracts: BTreeMap::new(),
            tx_index: HashMap::new(),
            token_ttl,
            next_token_nonce: 0,
        }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    /// Direct mutable access for fault injection. Call
    /// [`BlockchainDb::rebuild_index`] afterwards if blocks were removed.
    pub fn chain_mut(&mut self) -> &mut Chain {
        &mut self.chain
    }

    pub fn token_ttl(&self) -> u64 {
        self.token_ttl
    }

    pub fn enqueue(&mut self, tx: Transaction) {
        self.pending.push_back(tx);
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn pending(&self) -> impl Iterator<Item = &Transaction> {
        self.pending.iter()
    }

    /// Mines the oldest `count` pending transactions into one block and
    /// appends it. Returns `None` if fewer than `count` are waiting.
    pub fn mine_pending(&mut self, count: usize, clock: u64) -> Option<&Block> {
        if count == 0 || self.pending.len() < count {
            return None;
        }
        let payload: Vec<Transaction> = self.pending.drain(..count).collect();
        let block = mine_block(&self.chain, payload, clock);
        let index = block.index;
        for tx in &block.payload {
            self.tx_index.entry(tx.clone()).or_insert(index);
        }
        self.chain
            .append_block(block)
            .expect("freshly mined block extends the tip");
        self.chain.get(index)
    }

    /// Block index holding `tx`, if it has been mined.
    pub fn locate(&self, tx: &[u8]) -> Option<u64> {
        self.tx_index.get(tx).copied()
    }

    pub fn rebuild_index(&mut self) {
        self.tx_index.clear();
        for block in self.chain.blocks() {
            for tx in &block.payload {
                self.tx_index.entry(tx.clone()).or_insert(block.index);
            }
        }
    }

    pub fn contract(&self, contract_id: &str) -> Option<&SmartContract> {
        self.contracts.get(contract_id)
    }

    pub fn contracts(&self) -> impl Iterator<Item = &SmartContract> {
        self.contracts.values()
    }

    /// Issues a token for an active device against a published contract and
    /// queues its issuance record for mining.
    pub fn issue_token(&mut self, device: &IoTNode, contract_id: &str, now: u64) -> Result<Token, AuthzError> {
        if !device.is_active() {
            return Err(AuthzError::InactiveDevice(device.id().to_string()));
        }
        if !self.contracts.contains_key(contract_id) {
            return Err(AuthzError::NotFound(contract_id.to_string()));
        }
        let nonce = self.next_token_nonce;
        self.next_token_nonce += 1;
        let token = Token {
            token_id: Token::derive_id(device.id(), contract_id, nonce),
            device_id: device.id().to_string(),
            contract_id: contract_id.to_string(),
            nonce,
            issued_at: now,
            expires_at: now + self.token_ttl.max(1),
            anchor: None,
        };
        self.enqueue(token.issuance_record());
        Ok(token)
    }

    /// Sets `token.anchor` once its issuance record is on the chain.
    pub fn anchor(&self, token: &mut Token) -> Option<u64> {
        if token.anchor.is_none() {
            token.anchor = self.locate(&token.issuance_record());
        }
        token.anchor
    }
}

/// Registers `contract` and queues its publication record.
pub fn publish_contract(db: &mut BlockchainDb, contract: SmartContract) -> Result<String, AuthzError> {
    if db.contracts.contains_key(&contract.contract_id) {
        return Err(AuthzError::DuplicateContract(contract.contract_id));
    }
    let id = contract.contract_id.clone();
    db.enqueue(contract.publication_record());
    db.contracts.insert(id.clone(), contract);
    Ok(id)
}

/// The unique contract guarding `resource`. Several matches are an error,
/// not a tie-break.
pub fn find_contract<'a>(db: &'a BlockchainDb, resource: &str) -> Result<&'a SmartContract, AuthzError> {
    let mut matches = db.contracts.values().filter(|c| c.resource == resource);
    match (matches.next(), matches.count()) {
        (None, _) => Err(AuthzError::NotFound(resource.to_string())),
        (Some(contract), 0) => Ok(contract),
        (Some(_), others) => Err(AuthzError::Ambiguous {
            resource: resource.to_string(),
            count: others + 1,
        }),
    }
}

/// Accepts iff the id recomputes from the token's fields, the chain
/// validates, the anchor block holds the issuance record, and `now` is
/// before expiry. Checked in that order.
pub fn verify_token(db: &BlockchainDb, token: &Token, now: u64) -> Result<(), VerifyError> {
    if Token::derive_id(&token.device_id, &token.contract_id, token.nonce) != token.token_id {
        return Err(VerifyError::Integrity);
    }
    validate_chain(&db.chain).map_err(VerifyError::ChainInvalid)?;
    let record = token.issuance_record();
    let anchored = token
        .anchor
        .and_then(|index| db.chain.get(index))
        .is_some_and(|block| block.contains(&record));
    if !anchored {
        return Err(VerifyError::NotAnchored);
    }
    if now >= token.expires_at {
        return Err(VerifyError::Expired {
            expires_at: token.expires_at,
            now,
        });
    }
    Ok(())
}
