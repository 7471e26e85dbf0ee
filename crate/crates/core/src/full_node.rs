//! The archival node.
//!
//! A full node is a validator that additionally stores every block, its
//! approved transactions, and its tree delta, indexed by block hash. It
//! serves the sync protocol (latest branch updates over an ancestry
//! interval), missing blocks and transactions, and doubles as the ground
//! truth for simulation safety sweeps.

use crate::chain::{derive_indexed_outputs, ChainConfig, Genesis};
use crate::hash::Hash32;
use crate::keys::Address;
use crate::node::{ApplyError, NodeState};
use crate::tree::{TreeDelta, TreeError};
use crate::types::{Amount, Block, BranchId, LeafIndex, Transaction, Txo};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown block {0}")]
    UnknownBlock(Hash32),
    #[error("parent {0} not stored")]
    UnknownParent(Hash32),
    #[error("{from} is not an ancestor of {to}")]
    NotAncestor { from: Hash32, to: Hash32 },
    #[error("block fails re-validation: {0}")]
    Validation(#[from] ApplyError),
    #[error("supplied delta does not match the recomputed delta")]
    DeltaMismatch,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

struct StoredBlock {
    block: Block,
    height: u64,
    txs: Vec<Transaction>,
    delta: TreeDelta,
    reward_to: Option<Address>,
}

/// Append-only store of the whole chain, fork branches included.
pub struct FullNodeStore {
    config: ChainConfig,
    genesis_hash: Hash32,
    genesis_outputs: Vec<Txo>,
    blocks: HashMap<Hash32, StoredBlock>,
    children: HashMap<Hash32, Vec<Hash32>>,
    insertion_order: Vec<Hash32>,
}

impl FullNodeStore {
    pub fn new(config: ChainConfig, genesis: &Genesis) -> FullNodeStore {
        let genesis_hash = genesis.block.hash();
        let mut blocks = HashMap::new();
        blocks.insert(
            genesis_hash,
            StoredBlock {
                block: genesis.block.clone(),
                height: 0,
                txs: Vec::new(),
                delta: genesis.delta.clone(),
                reward_to: None,
            },
        );
        FullNodeStore {
            config,
            genesis_hash,
            genesis_outputs: genesis.outputs.clone(),
            blocks,
            children: HashMap::new(),
            insertion_order: vec![genesis_hash],
        }
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn genesis_hash(&self) -> Hash32 {
        self.genesis_hash
    }

    pub fn contains(&self, hash: &Hash32) -> bool {
        self.blocks.contains_key(hash)
    }

    pub fn height_of(&self, hash: &Hash32) -> Result<u64, StoreError> {
        Ok(self.stored(hash)?.height)
    }

    fn stored(&self, hash: &Hash32) -> Result<&StoredBlock, StoreError> {
        self.blocks.get(hash).ok_or(StoreError::UnknownBlock(*hash))
    }

    /// Validates and stores a block on top of its (already stored)
    /// parent. The supplied delta must match the recomputed one exactly.
    /// Both sides of a fork are accepted; re-recording a stored block is
    /// a no-op.
    pub fn record_block(
        &mut self,
        block: &Block,
        txs: &[Transaction],
        delta: &TreeDelta,
        reward_to: Option<Address>,
    ) -> Result<Hash32, StoreError> {
        let hash = block.hash();
        if self.blocks.contains_key(&hash) {
            return Ok(hash);
        }
        let parent = self
            .blocks
            .get(&block.parent)
            .ok_or(StoreError::UnknownParent(block.parent))?;
        let height = parent.height + 1;

        // Re-validate by recomputation from the parent tip.
        let mut scratch = NodeState::new(self.config.clone(), &parent.block);
        let applied = scratch.apply_block(block, txs, reward_to)?;
        if applied.delta != *delta {
            return Err(StoreError::DeltaMismatch);
        }

        self.blocks.insert(
            hash,
            StoredBlock {
                block: block.clone(),
                height,
                txs: txs.to_vec(),
                delta: delta.clone(),
                reward_to,
            },
        );
        self.children.entry(block.parent).or_default().push(hash);
        self.insertion_order.push(hash);
        Ok(hash)
    }

    pub fn get_block(&self, hash: &Hash32) -> Result<&Block, StoreError> {
        Ok(&self.stored(hash)?.block)
    }

    pub fn get_transactions(&self, hash: &Hash32) -> Result<&[Transaction], StoreError> {
        Ok(&self.stored(hash)?.txs)
    }

    pub fn get_delta(&self, hash: &Hash32) -> Result<&TreeDelta, StoreError> {
        Ok(&self.stored(hash)?.delta)
    }

    /// The outputs a stored block appended, with indexes, rederived from
    /// the parent frontier and the ordered transactions.
    pub fn block_outputs(&self, hash: &Hash32) -> Result<Vec<Txo>, StoreError> {
        if *hash == self.genesis_hash {
            return Ok(self.genesis_outputs.clone());
        }
        let stored = self.stored(hash)?;
        let parent = self.stored(&stored.block.parent)?;
        let mut outputs = derive_indexed_outputs(&parent.block, &stored.txs);
        if let Some(addr) = stored.reward_to {
            let fees = stored
                .txs
                .iter()
                .filter_map(crate::chain::fee_of)
                .fold(Amount::zero(), |a, f| a + f);
            if !fees.is_zero() {
                let index = outputs
                    .last()
                    .map(|t| t.index.unwrap() + 1)
                    .or_else(|| parent.block.rightmost_index.map(|i| i + 1))
                    .unwrap_or_default();
                let mut reward = Txo::new_output(addr, fees, stored.block.parent);
                reward.index = Some(index);
                outputs.push(reward);
            }
        }
        Ok(outputs)
    }

    /// The TXOs a stored block spent.
    pub fn block_spent(&self, hash: &Hash32) -> Result<Vec<Txo>, StoreError> {
        Ok(self
            .stored(hash)?
            .txs
            .iter()
            .flat_map(|t| t.inputs.iter().map(|i| i.txo))
            .collect())
    }

    /// True iff `a` lies on the parent chain of `b` (reflexively).
    pub fn is_ancestor(&self, a: &Hash32, b: &Hash32) -> Result<bool, StoreError> {
        let target_height = self.stored(a)?.height;
        let mut cursor = *b;
        loop {
            if cursor == *a {
                return Ok(true);
            }
            let stored = self.stored(&cursor)?;
            if stored.height <= target_height {
                return Ok(false);
            }
            cursor = stored.block.parent;
        }
    }

    /// Block hashes strictly after `from` up to and including `to`,
    /// oldest first.
    pub fn ancestry(&self, from: &Hash32, to: &Hash32) -> Result<Vec<Hash32>, StoreError> {
        if !self.is_ancestor(from, to)? {
            return Err(StoreError::NotAncestor {
                from: *from,
                to: *to,
            });
        }
        let mut path = Vec::new();
        let mut cursor = *to;
        while cursor != *from {
            path.push(cursor);
            cursor = self.stored(&cursor)?.block.parent;
        }
        path.reverse();
        Ok(path)
    }

    /// The sync query: for each requested branch id, the most recent
    /// update on the interval `(from, to]`, as (block hash, node hash).
    /// Branches with no update on the interval are omitted. Errors if
    /// `from` is not an ancestor of `to`.
    pub fn latest_updates(
        &self,
        ids: &[BranchId],
        from: &Hash32,
        to: &Hash32,
    ) -> Result<BTreeMap<BranchId, (Hash32, Hash32)>, StoreError> {
        let path = self.ancestry(from, to)?;
        let mut found: BTreeMap<BranchId, (Hash32, Hash32)> = BTreeMap::new();
        // Newest block first: the first hit per branch is the latest.
        for hash in path.iter().rev() {
            if found.len() == ids.len() {
                break;
            }
            let delta = &self.stored(hash)?.delta;
            for id in ids {
                if !found.contains_key(id) {
                    if let Some(value) = delta.get(id) {
                        found.insert(*id, (*hash, *value));
                    }
                }
            }
        }
        Ok(found)
    }

    /// Blocks with no recorded children, in insertion order.
    pub fn tips(&self) -> Vec<Hash32> {
        self.insertion_order
            .iter()
            .filter(|h| !self.children.contains_key(*h))
            .copied()
            .collect()
    }

    /// Scripted fork choice: the highest tip, first-recorded winning ties.
    pub fn best_tip(&self) -> Hash32 {
        let mut best = self.genesis_hash;
        let mut best_height = 0;
        for hash in &self.insertion_order {
            if self.children.contains_key(hash) {
                continue;
            }
            let height = self.blocks[hash].height;
            if height > best_height {
                best = *hash;
                best_height = height;
            }
        }
        best
    }

    /// Deepest common ancestor of two stored blocks.
    pub fn common_ancestor(&self, a: &Hash32, b: &Hash32) -> Result<Hash32, StoreError> {
        let mut x = *a;
        let mut y = *b;
        while self.stored(&x)?.height > self.stored(&y)?.height {
            x = self.stored(&x)?.block.parent;
        }
        while self.stored(&y)?.height > self.stored(&x)?.height {
            y = self.stored(&y)?.block.parent;
        }
        while x != y {
            x = self.stored(&x)?.block.parent;
            y = self.stored(&y)?.block.parent;
        }
        Ok(x)
    }

    /// Serialized bytes of everything stored: blocks, transactions, and
    /// deltas. Grows with chain length, unlike a validator's state.
    pub fn storage_bytes(&self) -> usize {
        self.blocks
            .values()
            .map(|s| {
                s.block.serialize().len()
                    + s.txs.iter().map(|t| t.serialize().len()).sum::<usize>()
                    + s.delta.serialize().len()
            })
            .sum()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Reconstructs the full leaf assignment at `tip` by replaying the
    /// stored history: every output ever created on the ancestry with its
    /// unused hash, overwritten by the used hash where spent. This is the
    /// ground truth the dense oracle consumes.
    pub fn leaf_map_at(&self, tip: &Hash32) -> Result<BTreeMap<LeafIndex, Hash32>, StoreError> {
        let mut chain = self.ancestry(&self.genesis_hash, tip)?;
        chain.insert(0, self.genesis_hash);
        let mut leaves = BTreeMap::new();
        for hash in &chain {
            for txo in self.block_outputs(hash)? {
                leaves.insert(
                    txo.index.unwrap(),
                    txo.leaf_hash_unused().expect("stored outputs are indexed"),
                );
            }
            for txo in self.block_spent(hash)? {
                leaves.insert(
                    txo.index.unwrap(),
                    txo.leaf_hash_used().expect("stored inputs are indexed"),
                );
            }
        }
        Ok(leaves)
    }

    /// Sum of balances of TXOs created but not spent on the ancestry of
    /// `tip`.
    pub fn unspent_supply_at(&self, tip: &Hash32) -> Result<Amount, StoreError> {
        let mut chain = self.ancestry(&self.genesis_hash, tip)?;
        chain.insert(0, self.genesis_hash);
        let mut unspent: BTreeMap<LeafIndex, Amount> = BTreeMap::new();
        for hash in &chain {
            for txo in self.block_outputs(hash)? {
                unspent.insert(txo.index.unwrap(), txo.balance);
            }
            for txo in self.block_spent(hash)? {
                unspent.remove(&txo.index.unwrap());
            }
        }
        Ok(unspent.values().fold(Amount::zero(), |a, b| a + b))
    }

    /// Total fees burned along the ancestry of `tip`. Fees minted back to
    /// proposers do not count.
    pub fn cumulative_fees_at(&self, tip: &Hash32) -> Result<Amount, StoreError> {
        let chain = self.ancestry(&self.genesis_hash, tip)?;
        let mut fees = Amount::zero();
        for hash in &chain {
            let stored = self.stored(hash)?;
            if stored.reward_to.is_some() {
                continue;
            }
            for tx in &stored.txs {
                fees = fees + crate::chain::fee_of(tx).unwrap_or_default();
            }
        }
        Ok(fees)
    }
}
