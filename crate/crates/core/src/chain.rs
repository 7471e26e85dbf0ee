//! Chain-wide configuration shared by every participant, and the genesis
//! block derived from it.
//!
//! Coins enter the system exactly once: the genesis allocation is baked
//! into the configuration, so every node derives the same genesis block
//! and no trust or validation is needed for it.

use crate::hash::Hash32;
use crate::keys::Address;
use crate::tree::{BlockComputation, TreeDelta, TxoTree};
use crate::types::{Amount, Block, Transaction, Txo};

/// Parameters of the proof-truncation window: a client transacting at
/// least every `t_seconds` against a chain producing a block every
/// `interval` seconds with `txos_per_block` new TXOs each can drop proof
/// entries above `⌈log₂(t·n/interval)⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationParams {
    pub t_seconds: u64,
    pub interval: u64,
    pub txos_per_block: u64,
}

impl TruncationParams {
    pub fn height(&self) -> u8 {
        crate::tree::truncation_height(self.t_seconds, self.interval, self.txos_per_block)
    }
}

/// Everything that must be agreed out of band for a chain to exist.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub tree_height: u8,
    /// Minimum fee each transaction must leave unspent, per input.
    pub fee_per_input: Amount,
    /// Also require signatures from output owners, not just input owners.
    pub strict_sigs: bool,
    /// Mint collected fees to the proposer as an extra output appended to
    /// the block; fees are burned when unset.
    pub reward_to_proposer: bool,
    pub trunc: TruncationParams,
    /// Initial coin distribution; these TXOs occupy the first leaves of
    /// the genesis tree.
    pub genesis_allocation: Vec<(Address, Amount)>,
}

impl ChainConfig {
    pub fn new(tree_height: u8) -> ChainConfig {
        ChainConfig {
            tree_height,
            fee_per_input: Amount::zero(),
            strict_sigs: false,
            reward_to_proposer: false,
            trunc: TruncationParams {
                t_seconds: 604_800,
                interval: 15,
                txos_per_block: 10_000,
            },
            genesis_allocation: Vec::new(),
        }
    }

    pub fn tree(&self) -> TxoTree {
        TxoTree::new(self.tree_height)
    }

    /// Total coins issued at genesis.
    pub fn initial_supply(&self) -> Amount {
        self.genesis_allocation
            .iter()
            .fold(Amount::zero(), |acc, (_, amount)| acc + amount)
    }

    /// Deterministically builds the genesis block and its tree delta from
    /// the allocation. An empty allocation yields the all-null tree.
    pub fn build_genesis(&self, tree: &TxoTree) -> Genesis {
        let pre = tree.empty_block();
        if self.genesis_allocation.is_empty() {
            return Genesis {
                block: pre,
                delta: TreeDelta::default(),
                outputs: Vec::new(),
            };
        }
        let created: Vec<Txo> = self
            .genesis_allocation
            .iter()
            .map(|(owner, amount)| Txo::new_output(*owner, *amount, Hash32::ZERO))
            .collect();
        let BlockComputation {
            root,
            rightmost_index,
            rightmost_hash,
            rightmost_proof,
            delta,
            indexed_outputs,
        } = tree
            .compute_block_delta(&pre, &[], &created)
            .expect("genesis allocation fits the tree");
        Genesis {
            block: Block {
                parent: Hash32::ZERO,
                root,
                rightmost_index: Some(rightmost_index),
                rightmost_hash,
                rightmost_proof,
            },
            delta,
            outputs: indexed_outputs,
        }
    }
}

/// The genesis block plus the artifacts participants bootstrap from.
#[derive(Clone, Debug)]
pub struct Genesis {
    pub block: Block,
    pub delta: TreeDelta,
    /// Allocation TXOs with their leaf indexes assigned.
    pub outputs: Vec<Txo>,
}

/// Recomputes the indexed outputs of a block from its ordered transaction
/// list and the parent's rightmost index: outputs take consecutive leaves
/// after the parent's frontier, in transaction order. Anyone holding the
/// parent block and the transactions can rederive them.
pub fn derive_indexed_outputs(parent: &Block, txs: &[Transaction]) -> Vec<Txo> {
    let mut next = match parent.rightmost_index {
        Some(i) => i + 1,
        None => Default::default(),
    };
    let mut out = Vec::new();
    for tx in txs {
        for output in &tx.outputs {
            out.push(output.with_index(next));
            next = next + 1;
        }
    }
    out
}

/// The fee a transaction pays: total inputs minus total outputs. `None`
/// if either sum overflows or outputs exceed inputs.
pub fn fee_of(tx: &Transaction) -> Option<Amount> {
    tx.total_input()?.checked_sub(tx.total_output()?)
}
