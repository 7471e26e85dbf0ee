//! Randomized replay of the sparse block computation against the dense
//! reference tree: roots, frontiers, deltas, and maintained proofs must
//! agree on every block.

use primitive_types::U256;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use trail_core::oracle::DenseTree;
use trail_core::{
    update_proof, Block, BranchId, Hash32, KeyPair, LeafIndex, MerkleProof, Transaction, TreeDelta,
    TxInput, Txo, TxoTree,
};

fn proof_from_delta(tree: &TxoTree, delta: &TreeDelta, leaf: LeafIndex) -> MerkleProof {
    let siblings = (0..tree.height())
        .map(|h| {
            *delta
                .get(&BranchId::path_sibling(leaf, h))
                .expect("block delta covers every path sibling of a fresh leaf")
        })
        .collect();
    MerkleProof::full(siblings)
}

struct Replay {
    tree: TxoTree,
    block: Block,
    /// Live TXOs with proofs maintained across deltas.
    live: Vec<(Txo, MerkleProof)>,
    /// Ground-truth leaf assignment.
    leaves: BTreeMap<LeafIndex, Hash32>,
    counter: u64,
}

impl Replay {
    fn new(height: u8) -> Replay {
        let tree = TxoTree::new(height);
        let block = tree.empty_block();
        Replay {
            tree,
            block,
            live: Vec::new(),
            leaves: BTreeMap::new(),
            counter: 0,
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) -> trail_core::BlockComputation {
        let n_spend = if self.live.is_empty() {
            0
        } else {
            rng.gen_range(0..=self.live.len().min(3))
        };
        let mut victims = Vec::new();
        for _ in 0..n_spend {
            victims.push(self.live.remove(rng.gen_range(0..self.live.len())));
        }
        let mut n_create = rng.gen_range(0..=4usize);
        if victims.is_empty() && n_create == 0 {
            n_create = 1;
        }
        let created: Vec<Txo> = (0..n_create)
            .map(|i| {
                Txo::new_output(
                    KeyPair::from_id(self.counter * 7 + i as u64).address(),
                    U256::from(rng.gen_range(1..100u64)),
                    self.block.hash(),
                )
            })
            .collect();
        self.counter += 1;

        let spent: Vec<TxInput> = victims
            .iter()
            .map(|(txo, proof)| TxInput {
                txo: *txo,
                proof: proof.clone(),
            })
            .collect();
        let comp = self
            .tree
            .compute_block_delta(&self.block, &spent, &created)
            .expect("honest block computes");

        // Ground truth after the block.
        for (txo, _) in &victims {
            self.leaves
                .insert(txo.index.unwrap(), txo.leaf_hash_used().unwrap());
        }
        for txo in &comp.indexed_outputs {
            self.leaves
                .insert(txo.index.unwrap(), txo.leaf_hash_unused().unwrap());
        }
        let dense = DenseTree::build(&self.tree, &self.leaves).unwrap();

        assert_eq!(comp.root, dense.root(), "root mismatch");
        assert_eq!(comp.rightmost_hash, dense.leaf(comp.rightmost_index));
        assert_eq!(comp.rightmost_proof, dense.proof(comp.rightmost_index));
        for (id, value) in comp.delta.iter() {
            assert_eq!(dense.node(*id).as_ref(), Some(value), "delta wrong at {id}");
        }

        // Surviving proofs fold through the delta and stay valid.
        for (txo, proof) in &mut self.live {
            *proof = update_proof(proof, txo.index.unwrap(), &comp.delta);
            assert!(self
                .tree
                .verify_proof(
                    &txo.leaf_hash_unused().unwrap(),
                    txo.index.unwrap(),
                    proof,
                    &comp.root
                )
                .unwrap());
        }
        // Spent leaves verify as used and no longer as unused.
        for (txo, proof) in &victims {
            let updated = update_proof(proof, txo.index.unwrap(), &comp.delta);
            assert!(self
                .tree
                .verify_proof(
                    &txo.leaf_hash_used().unwrap(),
                    txo.index.unwrap(),
                    &updated,
                    &comp.root
                )
                .unwrap());
            assert!(!self
                .tree
                .verify_proof(
                    &txo.leaf_hash_unused().unwrap(),
                    txo.index.unwrap(),
                    &updated,
                    &comp.root
                )
                .unwrap());
        }
        // Fresh TXOs bootstrap their proofs from the delta alone.
        for txo in &comp.indexed_outputs {
            let proof = proof_from_delta(&self.tree, &comp.delta, txo.index.unwrap());
            assert!(self
                .tree
                .verify_proof(
                    &txo.leaf_hash_unused().unwrap(),
                    txo.index.unwrap(),
                    &proof,
                    &comp.root
                )
                .unwrap());
            self.live.push((*txo, proof));
        }

        self.block = Block {
            parent: self.block.hash(),
            root: comp.root,
            rightmost_index: Some(comp.rightmost_index),
            rightmost_hash: comp.rightmost_hash,
            rightmost_proof: comp.rightmost_proof.clone(),
        };
        comp
    }
}

#[test]
fn replay_matches_oracle_at_height_8() {
    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut replay = Replay::new(8);
        for _ in 0..25 {
            replay.step(&mut rng);
        }
    }
}

#[test]
fn replay_matches_oracle_at_height_4_saturating() {
    // Height 4 has 16 leaves; fill most of the tree to hit the frontier
    // edge cases near capacity.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut replay = Replay::new(4);
    for _ in 0..7 {
        replay.step(&mut rng);
    }
}

#[test]
fn competing_blocks_from_one_parent_both_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut replay = Replay::new(8);
    for _ in 0..10 {
        replay.step(&mut rng);
    }
    let parent = replay.block.clone();
    let base_leaves = replay.leaves.clone();

    // Two different blocks extend the same parent.
    for salt in 0..2u64 {
        let (victim_txo, victim_proof) = replay.live[salt as usize].clone();
        let created = vec![Txo::new_output(
            KeyPair::from_id(1000 + salt).address(),
            U256::from(5u64),
            parent.hash(),
        )];
        let comp = replay
            .tree
            .compute_block_delta(
                &parent,
                &[TxInput {
                    txo: victim_txo,
                    proof: victim_proof,
                }],
                &created,
            )
            .unwrap();
        let mut leaves = base_leaves.clone();
        leaves.insert(
            victim_txo.index.unwrap(),
            victim_txo.leaf_hash_used().unwrap(),
        );
        for txo in &comp.indexed_outputs {
            leaves.insert(txo.index.unwrap(), txo.leaf_hash_unused().unwrap());
        }
        let dense = DenseTree::build(&replay.tree, &leaves).unwrap();
        assert_eq!(comp.root, dense.root());
        assert_eq!(comp.rightmost_proof, dense.proof(comp.rightmost_index));
    }
}

#[test]
fn pending_proof_survives_five_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut replay = Replay::new(8);
    replay.step(&mut rng);
    let (txo, proof) = replay.live[0].clone();
    // Keep the replay from spending it out from under us.
    replay.live.retain(|(t, _)| t.index != txo.index);

    // A transaction spending `txo` stays pending while five blocks land;
    // folding each delta keeps its input proof valid at every tip.
    let mut pending = Transaction {
        block_hash: replay.block.hash(),
        inputs: vec![TxInput { txo, proof }],
        outputs: vec![Txo::new_output(
            KeyPair::from_id(500).address(),
            txo.balance,
            replay.block.hash(),
        )],
        sigs: vec![],
    };

    for _ in 0..5 {
        let comp = replay.step(&mut rng);
        let input = &mut pending.inputs[0];
        input.proof = update_proof(&input.proof, txo.index.unwrap(), &comp.delta);
        pending.block_hash = replay.block.hash();
        assert!(replay
            .tree
            .verify_proof(
                &txo.leaf_hash_unused().unwrap(),
                txo.index.unwrap(),
                &input.proof,
                &replay.block.root
            )
            .unwrap());
    }
}
