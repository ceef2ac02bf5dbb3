//! Randomized tamper operations with the index and failure kind each one
//! must be reported at.

use fogchain::ledger::{meets_difficulty, mine_block, Chain, ChainError, Digest, FailureKind};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tamper {
    Timestamp,
    Payload,
    Nonce,
    PrevHash,
    Hash,
    Index,
    SwapWithNext,
    Delete,
    /// Change the payload and recompute the hash without proof of work.
    Reseal,
}

pub const ALL: [Tamper; 9] = [
    Tamper::Timestamp,
    Tamper::Payload,
    Tamper::Nonce,
    Tamper::PrevHash,
    Tamper::Hash,
    Tamper::Index,
    Tamper::SwapWithNext,
    Tamper::Delete,
    Tamper::Reseal,
];

pub fn random_chain<R: Rng>(rng: &mut R, blocks: usize, difficulty: u32) -> Chain {
    let mut chain = Chain::new(difficulty);
    let mut clock = 0u64;
    for _ in 0..blocks {
        clock += rng.random_range(1..1000);
        let txs = rng.random_range(0..6);
        let payload = (0..txs)
            .map(|_| (0..rng.random_range(1..24)).map(|_| rng.random::<u8>()).collect())
            .collect();
        let block = mine_block(&chain, payload, clock);
        chain.append_block(block).unwrap();
    }
    chain
}

/// Applies `tamper` at block `k`, returning the failure it must produce, or
/// `None` when the operation does not apply at `k`.
pub fn apply(chain: &mut Chain, tamper: Tamper, k: usize) -> Option<ChainError> {
    let len = chain.len();
    let difficulty = chain.difficulty();
    let expected = |kind| {
        Some(ChainError {
            index: k as u64,
            kind: if k == 0 { FailureKind::BadGenesis } else { kind },
        })
    };
    let blocks = chain.blocks_mut();
    match tamper {
        Tamper::Timestamp => {
            blocks[k].timestamp ^= 1;
            expected(FailureKind::HashMismatch)
        }
        Tamper::Payload => {
            match blocks[k].payload.iter_mut().find(|tx| !tx.is_empty()) {
                Some(tx) => tx[0] ^= 0x01,
                None => blocks[k].payload.push(b"injected".to_vec()),
            }
            expected(FailureKind::HashMismatch)
        }
        Tamper::Nonce => {
            blocks[k].nonce = blocks[k].nonce.wrapping_add(1);
            expected(FailureKind::HashMismatch)
        }
        Tamper::PrevHash => {
            blocks[k].prev_hash.0[31] ^= 0x80;
            expected(FailureKind::LinkBreak)
        }
        Tamper::Hash => {
            blocks[k].hash.0[31] ^= 0x01;
            expected(FailureKind::HashMismatch)
        }
        Tamper::Index => {
            blocks[k].index += 1;
            expected(FailureKind::LinkBreak)
        }
        Tamper::SwapWithNext => {
            if k == 0 || k + 1 >= len {
                return None;
            }
            blocks.swap(k, k + 1);
            expected(FailureKind::LinkBreak)
        }
        Tamper::Delete => {
            if k == 0 || k + 1 >= len {
                return None;
            }
            blocks.remove(k);
            expected(FailureKind::LinkBreak)
        }
        Tamper::Reseal => {
            if k == 0 {
                return None;
            }
            let block = &mut blocks[k];
            block.payload.push(b"forged".to_vec());
            loop {
                block.hash = block.recompute_hash();
                if !meets_difficulty(&block.hash, difficulty) {
                    break;
                }
                block.nonce += 1;
            }
            expected(FailureKind::DifficultyFail)
        }
    }
}

pub fn digest_of(byte: u8) -> Digest {
    Digest([byte; 32])
}
