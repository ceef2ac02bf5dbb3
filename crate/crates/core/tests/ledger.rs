mod support;

use fogchain::ledger::{
    compute_hash, genesis_block, meets_difficulty, mine_block, validate_chain, Chain, Digest, FailureKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::tamper::{self, Tamper};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().last().unwrap().trim().to_string()
}

#[test]
fn genesis_matches_fixture() {
    let g = genesis_block();
    assert_eq!(g.hash.to_hex(), fixture("genesis.sha256"));
    assert_eq!(g.recompute_hash(), g.hash);
}

#[test]
fn block_one_matches_fixture() {
    let g = genesis_block();
    let payload = vec![b"tx-a".to_vec(), b"tx-b".to_vec()];
    assert_eq!(
        compute_hash(1, 1000, &g.hash, &payload, 7).to_hex(),
        fixture("block1.sha256")
    );
}

#[test]
fn export_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let chain = tamper::random_chain(&mut rng, 12, 1);
    let text = chain.export();
    assert_eq!(text.len(), chain.serialized_len());
    let back = Chain::import(&text, 1).unwrap();
    assert_eq!(back.blocks(), chain.blocks());
}

#[test]
fn every_tamper_kind_is_caught_where_applied() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut applied = 0;
    for _ in 0..20 {
        let blocks = rng.random_range(1..=20);
        let chain = tamper::random_chain(&mut rng, blocks, 1);
        assert_eq!(validate_chain(&chain), Ok(()));
        for op in tamper::ALL {
            let k = rng.random_range(0..chain.len());
            let mut copy = chain.clone();
            if let Some(expected) = tamper::apply(&mut copy, op, k) {
                assert_eq!(validate_chain(&copy), Err(expected), "{op:?} at {k} of {}", chain.len());
                applied += 1;
            }
        }
    }
    assert!(applied > 100);
}

#[test]
fn genesis_edits_are_bad_genesis() {
    let mut chain = Chain::new(1);
    chain.append_block(mine_block(&chain, vec![b"x".to_vec()], 5)).unwrap();
    for op in [Tamper::Timestamp, Tamper::Payload, Tamper::Hash, Tamper::Nonce] {
        let mut copy = chain.clone();
        tamper::apply(&mut copy, op, 0).unwrap();
        assert_eq!(validate_chain(&copy).unwrap_err().kind, FailureKind::BadGenesis);
    }
}

#[test]
fn bytes_grow_with_transactions_per_block() {
    let build = |tx_per_block: usize| {
        let mut chain = Chain::new(1);
        for b in 0..10u64 {
            let payload = (0..tx_per_block).map(|i| format!("tx-{b}-{i}").into_bytes()).collect();
            chain.append_block(mine_block(&chain, payload, b + 1)).unwrap();
        }
        chain.serialized_len()
    };
    assert!(build(1) < build(5));
    assert!(build(5) < build(10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hashing_is_deterministic(index: u64, ts: u64, nonce: u64, txs in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..16), 0..5)) {
        let prev = Digest([9; 32]);
        prop_assert_eq!(compute_hash(index, ts, &prev, &txs, nonce), compute_hash(index, ts, &prev, &txs, nonce));
    }

    #[test]
    fn mined_blocks_extend_and_validate(seed: u64, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chain = tamper::random_chain(&mut rng, n, 1);
        prop_assert_eq!(chain.len(), n + 1);
        prop_assert!(validate_chain(&chain).is_ok());
        for pair in chain.blocks().windows(2) {
            prop_assert_eq!(pair[1].prev_hash, pair[0].hash);
            prop_assert!(meets_difficulty(&pair[1].hash, 1));
        }
    }

    #[test]
    fn append_only(seed: u64, n in 1usize..6, field in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chain = tamper::random_chain(&mut rng, n, 1);
        let before = chain.blocks().to_vec();
        let mut stale = mine_block(&chain, vec![b"late".to_vec()], 99);
        match field {
            0 => stale.index -= 1,
            1 => stale.prev_hash = before[0].hash,
            _ => stale.nonce += 1,
        }
        let rejected = chain.append_block(stale).is_err();
        prop_assert!(rejected);
        prop_assert_eq!(chain.blocks(), &before[..]);
    }

    #[test]
    fn tampering_is_detected_at_its_index(seed: u64, n in 1usize..12, op in 0usize..9, at: prop::sample::Index) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chain = tamper::random_chain(&mut rng, n, 1);
        let k = at.index(chain.len());
        if let Some(expected) = tamper::apply(&mut chain, tamper::ALL[op], k) {
            prop_assert_eq!(validate_chain(&chain), Err(expected));
        }
    }
}
