//! Hash-chained block store with proof-of-work sealing, chain validation and
//! demand-weighted miner selection.

mod block;
mod chain;
mod miner;

pub use block::{compute_hash, meets_difficulty, Block, Digest, Transaction};
pub use chain::{
    genesis_block, mine_block, validate_chain, Chain, ChainError, FailureKind, ImportError, DEFAULT_DIFFICULTY,
};
pub use miner::{select_miner, Miner, MinerError};
