//! Reference tree that materializes every node.
//!
//! Used to cross-check the sparse root computation and for the global
//! safety sweeps in simulations. Deliberately written as the obvious
//! bottom-up fold over a fully materialized tree, sharing nothing with
//! [`crate::tree::TxoTree::compute_block_delta`] beyond the hash and null
//! definitions. Only viable at small heights.

use crate::hash::{sha256_pair, Hash32};
use crate::tree::{TreeError, TxoTree};
use crate::types::{BranchId, LeafIndex, MerkleProof};
use std::collections::BTreeMap;

/// Largest height the oracle will materialize (2^20 leaves).
pub const MAX_ORACLE_HEIGHT: u8 = 20;

/// A fully materialized TXO tree.
pub struct DenseTree {
    height: u8,
    /// `levels[h]` holds all `2^(height-h)` nodes of height `h`.
    levels: Vec<Vec<Hash32>>,
}

impl DenseTree {
    /// Builds the whole tree from the given leaf assignment; every other
    /// leaf is null.
    pub fn build(
        tree: &TxoTree,
        leaves: &BTreeMap<LeafIndex, Hash32>,
    ) -> Result<DenseTree, TreeError> {
        let height = tree.height();
        if height > MAX_ORACLE_HEIGHT {
            return Err(TreeError::OracleHeight(height, MAX_ORACLE_HEIGHT));
        }
        let width = 1usize << height;
        let mut level0 = vec![tree.null_at(0); width];
        for (&index, &value) in leaves {
            if !tree.leaf_in_range(index) {
                return Err(TreeError::IndexOutOfRange(index, height));
            }
            level0[index.as_usize()] = value;
        }
        let mut levels = vec![level0];
        for h in 0..height as usize {
            let below = &levels[h];
            let mut above = Vec::with_capacity(below.len() / 2);
            for pair in below.chunks_exact(2) {
                above.push(sha256_pair(&pair[0], &pair[1]));
            }
            levels.push(above);
        }
        Ok(DenseTree { height, levels })
    }

    pub fn root(&self) -> Hash32 {
        self.levels[self.height as usize][0]
    }

    pub fn node(&self, id: BranchId) -> Option<Hash32> {
        self.levels
            .get(id.height as usize)?
            .get(id.index.as_usize())
            .copied()
    }

    pub fn leaf(&self, index: LeafIndex) -> Hash32 {
        self.levels[0][index.as_usize()]
    }

    /// Full Merkle proof for `index`, read straight off the materialized
    /// levels.
    pub fn proof(&self, index: LeafIndex) -> MerkleProof {
        let mut siblings = Vec::with_capacity(self.height as usize);
        let mut pos = index.as_usize();
        for h in 0..self.height as usize {
            siblings.push(self.levels[h][pos ^ 1]);
            pos >>= 1;
        }
        MerkleProof::full(siblings)
    }
}
