use std::fmt;

use sha2::{Digest as _, Sha256};

/// Opaque transaction record carried in a block payload.
pub type Transaction = Vec<u8>;

/// SHA-256 digest, rendered as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).ok()?;
        // Uppercase input decodes too; only the canonical form is accepted.
        (s.bytes().all(|b| !b.is_ascii_uppercase())).then_some(Digest(out))
    }

    /// Number of leading zero hex digits.
    pub fn leading_zero_nibbles(&self) -> u32 {
        let mut count = 0;
        for byte in self.0 {
            if byte == 0 {
                count += 2;
                continue;
            }
            if byte >> 4 == 0 {
                count += 1;
            }
            break;
        }
        count
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

pub fn meets_difficulty(hash: &Digest, difficulty: u32) -> bool {
    hash.leading_zero_nibbles() >= difficulty
}

/// Hashes the canonical serialization of a block header and payload.
///
/// Layout: index, timestamp, the 64 ASCII hex characters of `prev_hash`,
/// transaction count, then each transaction as length followed by its bytes,
/// then nonce. Every integer is 8-byte big-endian.
pub fn compute_hash(index: u64, timestamp: u64, prev_hash: &Digest, payload: &[Transaction], nonce: u64) -> Digest {
    let mut hasher = prefix_hasher(index, timestamp, prev_hash, payload);
    hasher.update(nonce.to_be_bytes());
    Digest(hasher.finalize().into())
}

/// Hasher state with everything but the nonce absorbed, so nonce search only
/// re-hashes the tail.
pub(crate) fn prefix_hasher(index: u64, timestamp: u64, prev_hash: &Digest, payload: &[Transaction]) -> Sha256 {
    let mut hasher = Sha256::new();
    hasher.update(index.to_be_bytes());
    hasher.update(timestamp.to_be_bytes());
    hasher.update(prev_hash.to_hex().as_bytes());
    hasher.update((payload.len() as u64).to_be_bytes());
    for tx in payload {
        hasher.update((tx.len() as u64).to_be_bytes());
        hasher.update(tx);
    }
    hasher
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    /// Milliseconds of simulated time.
    pub timestamp: u64,
    pub prev_hash: Digest,
    pub payload: Vec<Transaction>,
    pub nonce: u64,
    pub hash: Digest,
}

impl Block {
    pub fn recompute_hash(&self) -> Digest {
        compute_hash(self.index, self.timestamp, &self.prev_hash, &self.payload, self.nonce)
    }

    /// One export line (without the trailing newline): tab-separated index,
    /// timestamp, prev_hash, payload, nonce, hash. The payload is the
    /// comma-joined hex of each transaction.
    pub fn export_line(&self) -> String {
        let payload: Vec<String> = self.payload.iter().map(hex::encode).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.index,
            self.timestamp,
            self.prev_hash,
            payload.join(","),
            self.nonce,
            self.hash
        )
    }

    pub fn contains(&self, tx: &[u8]) -> bool {
        self.payload.iter().any(|t| t == tx)
    }
}
