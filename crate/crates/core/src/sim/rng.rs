use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent random streams derived from one run seed. Each stream is
/// keyed by name, so drawing more from one never shifts another.
#[derive(Debug, Clone)]
pub struct Streams {
    pub lengths: ChaCha8Rng,
    pub service: ChaCha8Rng,
    pub forwarding: ChaCha8Rng,
    pub selection: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self {
            lengths: stream(seed, "lengths"),
            service: stream(seed, "service"),
            forwarding: stream(seed, "forwarding"),
            selection: stream(seed, "selection"),
        }
    }
}

pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_be_bytes());
    hasher.update(name.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}
