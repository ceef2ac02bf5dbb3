use std::fmt;

use thiserror::Error;

use super::block::{compute_hash, meets_difficulty, prefix_hasher, Block, Digest, Transaction};
use sha2::Digest as _;

/// Leading zero hex digits required of every mined block.
pub const DEFAULT_DIFFICULTY: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureKind {
    BadGenesis,
    LinkBreak,
    HashMismatch,
    DifficultyFail,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::BadGenesis => "bad-genesis",
            FailureKind::LinkBreak => "link-break",
            FailureKind::HashMismatch => "hash-mismatch",
            FailureKind::DifficultyFail => "difficulty-fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind} at block {index}")]
pub struct ChainError {
    pub index: u64,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ImportError {
    pub line: usize,
    pub reason: String,
}

/// Index 0, timestamp 0, all-zero previous hash, empty payload, nonce 0.
/// Its hash is computed, not mined.
pub fn genesis_block() -> Block {
    Block {
        index: 0,
        timestamp: 0,
        prev_hash: Digest::ZERO,
        payload: Vec::new(),
        nonce: 0,
        hash: compute_hash(0, 0, &Digest::ZERO, &[], 0),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
    difficulty: u32,
}

impl Chain {
    pub fn new(difficulty: u32) -> Self {
        Self {
            blocks: vec![genesis_block()],
            difficulty,
        }
    }

    /// Wraps blocks without checking them; run [`validate_chain`] before
    /// trusting the result.
    pub fn from_blocks(blocks: Vec<Block>, difficulty: u32) -> Self {
        Self { blocks, difficulty }
    }

    pub fn difficulty(&self) -> u32 {
        self.difficulty
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Direct mutable access for fault injection.
    pub fn blocks_mut(&mut self) -> &mut Vec<Block> {
        &mut self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn get(&self, index: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(index).ok()?)
    }

    /// Appends `block` if it extends the tip; otherwise the chain is left
    /// untouched.
    pub fn append_block(&mut self, block: Block) -> Result<(), ChainError> {
        check_successor(self.tip(), &block, self.difficulty)?;
        self.blocks.push(block);
        Ok(())
    }

    /// Newline-terminated export, one [`Block::export_line`] per block.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            out.push_str(&block.export_line());
            out.push('\n');
        }
        out
    }

    /// Size in bytes of [`Chain::export`].
    pub fn serialized_len(&self) -> usize {
        self.blocks.iter().map(|b| b.export_line().len() + 1).sum()
    }

    /// Parses an export back into a chain. Structural only; validation is
    /// separate.
    pub fn import(text: &str, difficulty: u32) -> Result<Self, ImportError> {
        let mut blocks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |reason: &str| ImportError {
                line: i + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(err("expected 6 tab-separated fields"));
            }
            let payload = if fields[3].is_empty() {
                Vec::new()
            } else {
                fields[3]
                    .split(',')
                    .map(hex::decode)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err("payload is not hex"))?
            };
            blocks.push(Block {
                index: fields[0].parse().map_err(|_| err("bad index"))?,
                timestamp: fields[1].parse().map_err(|_| err("bad timestamp"))?,
                prev_hash: Digest::from_hex(fields[2]).ok_or_else(|| err("bad prev_hash"))?,
                payload,
                nonce: fields[4].parse().map_err(|_| err("bad nonce"))?,
                hash: Digest::from_hex(fields[5]).ok_or_else(|| err("bad hash"))?,
            });
        }
        Ok(Self { blocks, difficulty })
    }
}

fn check_successor(prev: &Block, block: &Block, difficulty: u32) -> Result<(), ChainError> {
    let fail = |kind| ChainError {
        index: block.index,
        kind,
    };
    if block.index != prev.index + 1 || block.prev_hash != prev.hash {
        return Err(ChainError {
            index: prev.index + 1,
            kind: FailureKind::LinkBreak,
        });
    }
    if block.recompute_hash() != block.hash {
        return Err(fail(FailureKind::HashMismatch));
    }
    if !meets_difficulty(&block.hash, difficulty) {
        return Err(fail(FailureKind::DifficultyFail));
    }
    Ok(())
}

/// Seals the next block on top of `chain`. Nonces are tried from 0 upward.
pub fn mine_block(chain: &Chain, payload: Vec<Transaction>, clock: u64) -> Block {
    let tip = chain.tip();
    let index = tip.index + 1;
    let prefix = prefix_hasher(index, clock, &tip.hash, &payload);
    let mut nonce = 0u64;
    loop {
        let mut hasher = prefix.clone();
        hasher.update(nonce.to_be_bytes());
        let hash = Digest(hasher.finalize().into());
        if meets_difficulty(&hash, chain.difficulty) {
            return Block {
                index,
                timestamp: clock,
                prev_hash: tip.hash,
                payload,
                nonce,
                hash,
            };
        }
        nonce += 1;
    }
}

/// Checks genesis, then every block in order for link, recomputed hash and
/// difficulty. Reports the first failure.
pub fn validate_chain(chain: &Chain) -> Result<(), ChainError> {
    let Some(first) = chain.blocks.first() else {
        return Err(ChainError {
            index: 0,
            kind: FailureKind::BadGenesis,
        });
    };
    if *first != genesis_block() {
        return Err(ChainError {
            index: 0,
            kind: FailureKind::BadGenesis,
        });
    }
    for (position, pair) in chain.blocks.windows(2).enumerate() {
        let expected_index = position as u64 + 1;
        // Positions, not stored indices, locate failures.
        check_successor(&pair[0], &pair[1], chain.difficulty).map_err(|e| ChainError {
            index: expected_index,
            kind: e.kind,
        })?;
    }
    Ok(())
}
