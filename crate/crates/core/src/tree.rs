//! The TXO tree accumulator.
//!
//! One perfect binary Merkle tree spans the whole chain. Leaves hold TXO
//! hashes (`hash(txo)` while unused, `hash(txo ‖ txo)` once spent) and are
//! assigned left to right as blocks append outputs. Nobody materializes
//! the tree: a block proposer rebuilds the root from the parent block's
//! rightmost frontier plus the proofs carried by the block's inputs, and
//! emits the set of changed nodes as a [`TreeDelta`].

use crate::hash::{sha256, sha256_pair, Hash32};
use crate::types::{
    Block, BranchId, CodecError, LeafIndex, MerkleProof, Reader, Txo, TxInput,
};
use primitive_types::U256;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("proof has {got} siblings, expected {expected}")]
    ProofLength { expected: usize, got: usize },
    #[error("proof for leaf {0} does not verify against the parent root")]
    ProofInvalid(LeafIndex),
    #[error("leaf index {0} out of range for tree height {1}")]
    IndexOutOfRange(LeafIndex, u8),
    #[error("input proofs disagree at {0}")]
    InconsistentProofs(BranchId),
    #[error("no value for sibling {0}; an input proof is missing")]
    MissingSibling(BranchId),
    #[error("duplicate input leaf {0}")]
    DuplicateInput(LeafIndex),
    #[error("input TXO has no assigned leaf index")]
    UnassignedInput,
    #[error("output TXO already carries a leaf index")]
    PreassignedOutput,
    #[error("outputs exceed tree capacity")]
    CapacityExceeded,
    #[error("nothing to apply: no spent and no created TXOs")]
    EmptyChange,
    #[error("proof is not truncated")]
    NotTruncated,
    #[error("tree height {0} exceeds the dense-oracle limit of {1}")]
    OracleHeight(u8, u8),
}

/// Tree geometry plus the chain of null hashes: `N_0 = hash("")` for an
/// empty leaf, `N_{h+1} = hash(N_h ‖ N_h)` for an empty subtree of height
/// `h + 1`.
#[derive(Clone, Debug)]
pub struct TxoTree {
    height: u8,
    nulls: Vec<Hash32>,
}

impl TxoTree {
    /// Production tree height: proofs carry 255 sibling hashes.
    pub const PRODUCTION_HEIGHT: u8 = 255;

    pub fn new(height: u8) -> TxoTree {
        assert!(height >= 1, "tree height must be at least 1");
        let mut nulls = Vec::with_capacity(height as usize + 1);
        nulls.push(sha256(b""));
        for h in 0..height as usize {
            nulls.push(sha256_pair(&nulls[h], &nulls[h]));
        }
        TxoTree { height, nulls }
    }

    pub fn height(&self) -> u8 {
        self.height
    }

    /// Null hash for an empty subtree rooted at `height`.
    pub fn null_at(&self, height: u8) -> Hash32 {
        self.nulls[height as usize]
    }

    /// Root of the all-empty tree.
    pub fn empty_root(&self) -> Hash32 {
        self.nulls[self.height as usize]
    }

    pub fn max_leaf_index(&self) -> LeafIndex {
        if self.height == 255 {
            (U256::one() << 255) - 1 + (U256::one() << 255)
        } else {
            (U256::one() << self.height) - 1
        }
    }

    pub fn leaf_in_range(&self, index: LeafIndex) -> bool {
        index <= self.max_leaf_index()
    }

    /// The pre-genesis block: empty tree, no rightmost leaf, null proof.
    /// Chains start from this state; it is the parent state handed to the
    /// genesis computation, never a block on the wire.
    pub fn empty_block(&self) -> Block {
        Block {
            parent: Hash32::ZERO,
            root: self.empty_root(),
            rightmost_index: None,
            rightmost_hash: self.null_at(0),
            rightmost_proof: MerkleProof::full(self.nulls[..self.height as usize].to_vec()),
        }
    }

    /// Folds `leaf_hash` up the tree with `proof` and compares the result
    /// to `root`. The side of each combination is bit `h` of the leaf
    /// index. The proof must be full length.
    pub fn verify_proof(
        &self,
        leaf_hash: &Hash32,
        index: LeafIndex,
        proof: &MerkleProof,
        root: &Hash32,
    ) -> Result<bool, TreeError> {
        if proof.len() != self.height as usize || proof.is_truncated() {
            return Err(TreeError::ProofLength {
                expected: self.height as usize,
                got: proof.len(),
            });
        }
        if !self.leaf_in_range(index) {
            return Err(TreeError::IndexOutOfRange(index, self.height));
        }
        let mut node = *leaf_hash;
        for h in 0..self.height as usize {
            let sibling = proof.sibling(h).unwrap();
            node = if index.bit(h) {
                sha256_pair(sibling, &node)
            } else {
                sha256_pair(&node, sibling)
            };
        }
        Ok(node == *root)
    }

    /// Computes the state transition of one block: spends `spent` (whose
    /// proofs must be full length and valid against `parent.root`),
    /// appends `created` at consecutive leaf indexes after the parent's
    /// rightmost leaf, and returns the new root, the new rightmost
    /// frontier, the delta of every node assigned or computed on the way,
    /// and the outputs with their indexes filled in.
    pub fn compute_block_delta(
        &self,
        parent: &Block,
        spent: &[TxInput],
        created: &[Txo],
    ) -> Result<BlockComputation, TreeError> {
        if spent.is_empty() && created.is_empty() {
            return Err(TreeError::EmptyChange);
        }
        let h = self.height as usize;

        // Check inputs before touching any level state.
        let mut seen = std::collections::BTreeSet::new();
        for input in spent {
            let index = input.txo.index.ok_or(TreeError::UnassignedInput)?;
            if !seen.insert(index) {
                return Err(TreeError::DuplicateInput(index));
            }
            let leaf = input
                .txo
                .leaf_hash_unused()
                .map_err(|_| TreeError::UnassignedInput)?;
            if !self.verify_proof(&leaf, index, &input.proof, &parent.root)? {
                return Err(TreeError::ProofInvalid(index));
            }
        }

        // Fix output indexes: consecutive after the parent's rightmost.
        let first_new = match parent.rightmost_index {
            Some(i) => i.checked_add(U256::one()).ok_or(TreeError::CapacityExceeded)?,
            None => U256::zero(),
        };
        let mut indexed_outputs = Vec::with_capacity(created.len());
        let mut next = first_new;
        for txo in created {
            if txo.index.is_some() {
                return Err(TreeError::PreassignedOutput);
            }
            if !self.leaf_in_range(next) {
                return Err(TreeError::CapacityExceeded);
            }
            indexed_outputs.push(txo.with_index(next));
            next = next.checked_add(U256::one()).ok_or(TreeError::CapacityExceeded)?;
        }

        // Per-level assignments, in the protocol order. Later stages
        // override earlier ones at the same position; equal input-proof
        // entries that disagree are rejected.
        let mut levels: Vec<Level> = vec![Level::new(); h + 1];

        for input in spent {
            let index = input.txo.index.unwrap();
            for lh in 0..h {
                levels[lh].place(
                    BranchId::path_sibling(index, lh as u8),
                    *input.proof.sibling(lh).unwrap(),
                    Provenance::InputProof,
                )?;
            }
        }
        if let Some(rm) = parent.rightmost_index {
            if parent.rightmost_proof.len() != h || parent.rightmost_proof.is_truncated() {
                return Err(TreeError::ProofLength {
                    expected: h,
                    got: parent.rightmost_proof.len(),
                });
            }
            for lh in 0..h {
                levels[lh].place(
                    BranchId::path_sibling(rm, lh as u8),
                    *parent.rightmost_proof.sibling(lh).unwrap(),
                    Provenance::RightmostProof,
                )?;
            }
            levels[0].place(
                BranchId::new(0, rm),
                parent.rightmost_hash,
                Provenance::RightmostHash,
            )?;
        }
        for txo in &indexed_outputs {
            levels[0].place(
                BranchId::new(0, txo.index.unwrap()),
                txo.leaf_hash_unused().unwrap(),
                Provenance::NewOutput,
            )?;
        }
        for input in spent {
            levels[0].place(
                BranchId::new(0, input.txo.index.unwrap()),
                input.txo.leaf_hash_used().unwrap(),
                Provenance::SpentInput,
            )?;
        }

        // Roll upward. At each level the rightmost assigned node may be
        // missing its sibling; that one position gets the null hash. Any
        // other missing sibling means a proof was not supplied.
        for lh in 0..h {
            let (rightmost_pos, _) = levels[lh]
                .slots
                .last_key_value()
                .expect("level cannot be empty below an assigned level");
            let rightmost_pos = *rightmost_pos;
            if !rightmost_pos.bit(0) {
                let fill = rightmost_pos + U256::one();
                if !levels[lh].slots.contains_key(&fill) {
                    levels[lh].slots.insert(
                        fill,
                        Slot {
                            value: self.null_at(lh as u8),
                            provenance: Provenance::NullFill,
                        },
                    );
                }
            }

            let positions: Vec<U256> = levels[lh].slots.keys().copied().collect();
            for &pos in &positions {
                if !levels[lh].slots.contains_key(&(pos ^ U256::one())) {
                    return Err(TreeError::MissingSibling(BranchId::new(
                        lh as u8,
                        pos ^ U256::one(),
                    )));
                }
            }
            let mut parents = Vec::new();
            for pos in positions.iter().filter(|p| !p.bit(0)) {
                let left = levels[lh].slots[pos].value;
                let right = levels[lh].slots[&(*pos | U256::one())].value;
                parents.push((pos >> 1, sha256_pair(&left, &right)));
            }
            for (pos, value) in parents {
                levels[lh + 1].place(BranchId::new(lh as u8 + 1, pos), value, Provenance::Computed)?;
            }
        }

        debug_assert_eq!(levels[h].slots.len(), 1);
        let root = levels[h]
            .slots
            .get(&U256::zero())
            .expect("root position computed")
            .value;

        let rightmost_index = match indexed_outputs.last() {
            Some(txo) => txo.index.unwrap(),
            None => parent
                .rightmost_index
                .expect("spend-only block implies a non-empty parent tree"),
        };
        let rightmost_hash = levels[0].slots[&rightmost_index].value;
        let mut proof_siblings = Vec::with_capacity(h);
        for lh in 0..h {
            let pos = BranchId::path_sibling(rightmost_index, lh as u8);
            let slot = levels[lh]
                .slots
                .get(&pos.index)
                .ok_or(TreeError::MissingSibling(pos))?;
            proof_siblings.push(slot.value);
        }

        let mut delta = TreeDelta::default();
        for (lh, level) in levels.iter().enumerate() {
            for (pos, slot) in &level.slots {
                delta.insert(BranchId::new(lh as u8, *pos), slot.value);
            }
        }

        Ok(BlockComputation {
            root,
            rightmost_index,
            rightmost_hash,
            rightmost_proof: MerkleProof::full(proof_siblings),
            delta,
            indexed_outputs,
        })
    }
}

/// Everything a block's root computation produces.
#[derive(Clone, Debug)]
pub struct BlockComputation {
    pub root: Hash32,
    pub rightmost_index: LeafIndex,
    pub rightmost_hash: Hash32,
    pub rightmost_proof: MerkleProof,
    pub delta: TreeDelta,
    /// The created TXOs with their leaf indexes filled in, in input order.
    pub indexed_outputs: Vec<Txo>,
}

/// Where a level assignment came from, in protocol order. Later stages
/// override earlier ones at the same position.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Provenance {
    InputProof,
    RightmostProof,
    RightmostHash,
    NewOutput,
    SpentInput,
    Computed,
    NullFill,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    value: Hash32,
    provenance: Provenance,
}

#[derive(Clone, Default)]
struct Level {
    slots: BTreeMap<U256, Slot>,
}

impl Level {
    fn new() -> Level {
        Level::default()
    }

    fn place(&mut self, at: BranchId, value: Hash32, provenance: Provenance) -> Result<(), TreeError> {
        use std::collections::btree_map::Entry;
        match self.slots.entry(at.index) {
            Entry::Vacant(slot) => {
                slot.insert(Slot { value, provenance });
            }
            Entry::Occupied(mut slot) => {
                let existing = slot.get_mut();
                if provenance == Provenance::InputProof
                    && existing.provenance == Provenance::InputProof
                {
                    if existing.value != value {
                        return Err(TreeError::InconsistentProofs(at));
                    }
                } else {
                    *existing = Slot { value, provenance };
                }
            }
        }
        Ok(())
    }
}

/// The nodes one block assigned or computed: a map from branch id to the
/// new hash, closed under the parent relation for computed entries and
/// containing the new root. This is the unit of proof maintenance,
/// client updates, and sync.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct TreeDelta {
    entries: BTreeMap<BranchId, Hash32>,
}

impl TreeDelta {
    pub fn insert(&mut self, id: BranchId, value: Hash32) {
        self.entries.insert(id, value);
    }

    pub fn get(&self, id: &BranchId) -> Option<&Hash32> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &BranchId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Iterates in (height, index) order.
    pub fn iter(&self) -> impl Iterator<Item = (&BranchId, &Hash32)> {
        self.entries.iter()
    }

    /// Union of two deltas, entries of `later` winning.
    pub fn merge(&mut self, later: &TreeDelta) {
        for (id, value) in later.iter() {
            self.entries.insert(*id, *value);
        }
    }

    /// Assembles a full proof for `leaf` from this delta alone. Succeeds
    /// for any leaf the delta touched, since a block computation always
    /// assigns every sibling along a touched path.
    pub fn proof_for(&self, leaf: LeafIndex, height: u8) -> Option<MerkleProof> {
        let mut siblings = Vec::with_capacity(height as usize);
        for h in 0..height {
            siblings.push(*self.get(&BranchId::path_sibling(leaf, h))?);
        }
        Some(MerkleProof::full(siblings))
    }

    /// Count prefix, then `(branch id, hash)` pairs sorted by
    /// (height, index).
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.entries.len() * (BranchId::LEN + 32));
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        for (id, value) in &self.entries {
            out.extend_from_slice(&id.serialize());
            out.extend_from_slice(value.as_bytes());
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<TreeDelta, CodecError> {
        let mut r = Reader::new(bytes);
        let delta = Self::read(&mut r)?;
        r.finish()?;
        Ok(delta)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<TreeDelta, CodecError> {
        let count = r.u32()? as usize;
        let mut entries = BTreeMap::new();
        for _ in 0..count {
            let id = BranchId::read(r)?;
            let value = r.hash()?;
            entries.insert(id, value);
        }
        Ok(TreeDelta { entries })
    }

    pub(crate) fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.serialize());
    }
}

impl FromIterator<(BranchId, Hash32)> for TreeDelta {
    fn from_iter<T: IntoIterator<Item = (BranchId, Hash32)>>(iter: T) -> TreeDelta {
        TreeDelta {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Replaces every proof entry whose sibling position appears in `delta`.
/// The result stays valid for leaves `delta` itself did not touch; the
/// caller is responsible for noticing a touched leaf (by looking up the
/// leaf's own branch id in the delta).
pub fn update_proof(proof: &MerkleProof, leaf: LeafIndex, delta: &TreeDelta) -> MerkleProof {
    let mut updated = proof.clone();
    for h in 0..proof.len() {
        let sibling = BranchId::path_sibling(leaf, h as u8);
        if let Some(value) = delta.get(&sibling) {
            *updated.sibling_mut(h).unwrap() = *value;
        }
    }
    updated
}

/// Drops proof entries at heights `trunc_height` and above, marking the
/// omission. The dropped suffix is recoverable from the rightmost proof of
/// the anchor block whenever the two paths have merged below
/// `trunc_height`.
pub fn truncate_proof(proof: &MerkleProof, trunc_height: u8) -> Result<MerkleProof, TreeError> {
    let keep = trunc_height as usize;
    if proof.is_truncated() || keep > proof.len() {
        return Err(TreeError::ProofLength {
            expected: keep,
            got: proof.len(),
        });
    }
    Ok(MerkleProof::truncated(proof.siblings()[..keep].to_vec()))
}

/// Rebuilds a full proof by splicing the anchor block's rightmost-proof
/// entries above the truncation height.
pub fn expand_proof(proof: &MerkleProof, latest: &Block) -> Result<MerkleProof, TreeError> {
    if !proof.is_truncated() {
        return Err(TreeError::NotTruncated);
    }
    let full = &latest.rightmost_proof;
    if proof.len() > full.len() {
        return Err(TreeError::ProofLength {
            expected: full.len(),
            got: proof.len(),
        });
    }
    let mut siblings = proof.siblings().to_vec();
    siblings.extend_from_slice(&full.siblings()[proof.len()..]);
    Ok(MerkleProof::full(siblings))
}

/// Truncation height for given client behaviour parameters: proofs agree
/// with the rightmost proof above `⌈log₂(t·n / interval)⌉`, where `t` is
/// the client's transaction period in seconds, `interval` the block
/// interval, and `n` the TXOs added per block.
pub fn truncation_height(t_seconds: u64, interval: u64, txos_per_block: u64) -> u8 {
    let window = (t_seconds as f64) * (txos_per_block as f64) / (interval as f64);
    window.log2().ceil().max(0.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::KeyPair;
    use crate::oracle::DenseTree;

    fn txo_at(index: u64, owner_id: u64, balance: u64) -> Txo {
        Txo {
            index: Some(U256::from(index)),
            parent_block: sha256(&owner_id.to_be_bytes()),
            owner: KeyPair::from_id(owner_id).address(),
            balance: U256::from(balance),
        }
    }

    fn dense_leaves(txos: &[Txo]) -> BTreeMap<U256, Hash32> {
        txos.iter()
            .map(|t| (t.index.unwrap(), t.leaf_hash_unused().unwrap()))
            .collect()
    }

    /// Block committing to the given dense tree state.
    fn block_of(dense: &DenseTree, parent: Hash32, rightmost: u64) -> Block {
        Block {
            parent,
            root: dense.root(),
            rightmost_index: Some(U256::from(rightmost)),
            rightmost_hash: dense.leaf(U256::from(rightmost)),
            rightmost_proof: dense.proof(U256::from(rightmost)),
        }
    }

    #[test]
    fn null_chain_matches_reference_values() {
        let tree = TxoTree::new(4);
        let expect = [
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
            "2dba5dbc339e7316aea2683faf839c1b7b1ee2313db792112588118df066aa35",
            "5310a330e8f970388503c73349d80b45cd764db615f1bced2801dcd4524a2ff4",
            "80d1bf4dd6c1f75bba022337a3f0842078f5c2e7f3f59dfd33ccbb8e963367b2",
            "1492e66e89e186840231850712161255d203b5bbf48d21242f0b51519b5eb3d4",
        ];
        for (h, hex) in expect.iter().enumerate() {
            assert_eq!(tree.null_at(h as u8).to_hex(), *hex);
        }
    }

    #[test]
    fn leaf_hash_regression_vectors() {
        let txo = Txo {
            index: Some(U256::from(5u64)),
            parent_block: sha256(b"trail-vector-parent"),
            owner: crate::keys::Address(sha256(b"trail-vector-owner").0),
            balance: U256::from(1000u64),
        };
        assert_eq!(
            txo.leaf_hash_unused().unwrap().to_hex(),
            "778a19c1825b873b493fb8aec7dfbf99b93ad1975ff624bac8ad3c732ce8d149"
        );
        assert_eq!(
            txo.leaf_hash_used().unwrap().to_hex(),
            "eb98d89b790d7b5c78d49c1612a40b587415abc270b60ee7e25c92ed616b8862"
        );
        let unindexed = Txo { index: None, ..txo };
        assert_eq!(unindexed.leaf_hash_unused(), Err(crate::types::UnassignedIndex));
        assert_eq!(unindexed.leaf_hash_used(), Err(crate::types::UnassignedIndex));
    }

    #[test]
    fn verify_two_leaf_tree() {
        let tree = TxoTree::new(1);
        let a = sha256(b"a");
        let root = sha256_pair(&a, &tree.null_at(0));
        let proof = MerkleProof::full(vec![tree.null_at(0)]);
        assert!(tree.verify_proof(&a, U256::zero(), &proof, &root).unwrap());
        assert!(!tree
            .verify_proof(&a, U256::zero(), &proof, &sha256(b"bogus"))
            .unwrap());
        let short = MerkleProof::full(vec![]);
        assert!(matches!(
            tree.verify_proof(&a, U256::zero(), &short, &root),
            Err(TreeError::ProofLength { .. })
        ));
    }

    #[test]
    fn single_output_into_empty_tree_matches_oracle() {
        let tree = TxoTree::new(4);
        let out = Txo::new_output(KeyPair::from_id(1).address(), U256::from(7u64), Hash32::ZERO);
        let comp = tree
            .compute_block_delta(&tree.empty_block(), &[], &[out])
            .unwrap();
        assert_eq!(comp.rightmost_index, U256::zero());
        let dense = DenseTree::build(&tree, &dense_leaves(&comp.indexed_outputs)).unwrap();
        assert_eq!(comp.root, dense.root());
        assert_eq!(comp.rightmost_proof, dense.proof(U256::zero()));
        // The delta reaches the root and covers the touched leaf.
        assert_eq!(comp.delta.get(&BranchId::new(4, U256::zero())), Some(&comp.root));
        assert!(comp.delta.contains(&BranchId::new(0, U256::zero())));
    }

    /// The worked example: height-4 tree, parent frontier at leaf 9, one
    /// input at leaf 2, three outputs. New frontier lands at leaf 12; the
    /// leaf at 13 and the height-1 node at 7 are null-filled; the new
    /// rightmost proof reads off positions (0,13), (1,7), (2,2), (3,0).
    #[test]
    fn frontier_walkthrough_height_four() {
        let tree = TxoTree::new(4);
        let parent_txos: Vec<Txo> = (0..10).map(|i| txo_at(i, i, 100 + i)).collect();
        let parent_dense = DenseTree::build(&tree, &dense_leaves(&parent_txos)).unwrap();
        let parent = block_of(&parent_dense, Hash32::ZERO, 9);

        let spend = TxInput {
            txo: parent_txos[2],
            proof: parent_dense.proof(U256::from(2u64)),
        };
        let outputs: Vec<Txo> = (0..3)
            .map(|i| Txo::new_output(KeyPair::from_id(50 + i).address(), U256::from(5u64), parent.hash()))
            .collect();
        let comp = tree
            .compute_block_delta(&parent, &[spend.clone()], &outputs)
            .unwrap();

        assert_eq!(comp.rightmost_index, U256::from(12u64));
        assert_eq!(
            comp.indexed_outputs.iter().map(|t| t.index.unwrap().as_u64()).collect::<Vec<_>>(),
            vec![10, 11, 12]
        );

        // Ground truth: rebuild the dense tree after the block.
        let mut leaves = dense_leaves(&parent_txos);
        leaves.insert(U256::from(2u64), parent_txos[2].leaf_hash_used().unwrap());
        for txo in &comp.indexed_outputs {
            leaves.insert(txo.index.unwrap(), txo.leaf_hash_unused().unwrap());
        }
        let dense = DenseTree::build(&tree, &leaves).unwrap();
        assert_eq!(comp.root, dense.root());
        assert_eq!(comp.rightmost_hash, dense.leaf(U256::from(12u64)));
        assert_eq!(comp.rightmost_proof, dense.proof(U256::from(12u64)));

        // Null fills at leaf 13 and height-1 index 7.
        assert_eq!(
            comp.delta.get(&BranchId::new(0, U256::from(13u64))),
            Some(&tree.null_at(0))
        );
        assert_eq!(
            comp.delta.get(&BranchId::new(1, U256::from(7u64))),
            Some(&tree.null_at(1))
        );

        // Height-1 node 5 covers the new outputs at leaves 10 and 11: the
        // recomputed value must override the parent's stale proof entry.
        let recomputed = sha256_pair(
            &dense.leaf(U256::from(10u64)),
            &dense.leaf(U256::from(11u64)),
        );
        assert_eq!(comp.delta.get(&BranchId::new(1, U256::from(5u64))), Some(&recomputed));
        assert_ne!(parent.rightmost_proof.sibling(1), Some(&recomputed));

        // Every delta entry agrees with the dense tree.
        for (id, value) in comp.delta.iter() {
            assert_eq!(dense.node(*id).as_ref(), Some(value), "mismatch at {id}");
        }
    }

    #[test]
    fn spend_only_block_keeps_frontier() {
        let tree = TxoTree::new(4);
        let parent_txos: Vec<Txo> = (0..5).map(|i| txo_at(i, i, 10)).collect();
        let parent_dense = DenseTree::build(&tree, &dense_leaves(&parent_txos)).unwrap();
        let parent = block_of(&parent_dense, Hash32::ZERO, 4);

        let spend = TxInput {
            txo: parent_txos[1],
            proof: parent_dense.proof(U256::from(1u64)),
        };
        let comp = tree.compute_block_delta(&parent, &[spend], &[]).unwrap();
        assert_eq!(comp.rightmost_index, U256::from(4u64));

        let mut leaves = dense_leaves(&parent_txos);
        leaves.insert(U256::from(1u64), parent_txos[1].leaf_hash_used().unwrap());
        let dense = DenseTree::build(&tree, &leaves).unwrap();
        assert_eq!(comp.root, dense.root());
        assert_eq!(comp.rightmost_proof, dense.proof(U256::from(4u64)));

        // Spending the frontier leaf itself rewrites the rightmost hash.
        let spend_frontier = TxInput {
            txo: parent_txos[4],
            proof: parent_dense.proof(U256::from(4u64)),
        };
        let comp2 = tree.compute_block_delta(&parent, &[spend_frontier], &[]).unwrap();
        assert_eq!(comp2.rightmost_hash, parent_txos[4].leaf_hash_used().unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let tree = TxoTree::new(4);
        let parent_txos: Vec<Txo> = (0..3).map(|i| txo_at(i, i, 10)).collect();
        let parent_dense = DenseTree::build(&tree, &dense_leaves(&parent_txos)).unwrap();
        let parent = block_of(&parent_dense, Hash32::ZERO, 2);

        assert_eq!(
            tree.compute_block_delta(&parent, &[], &[]).unwrap_err(),
            TreeError::EmptyChange
        );

        let bogus = TxInput {
            txo: parent_txos[0],
            proof: parent_dense.proof(U256::from(1u64)), // wrong leaf's proof
        };
        assert_eq!(
            tree.compute_block_delta(&parent, &[bogus], &[]).unwrap_err(),
            TreeError::ProofInvalid(U256::zero())
        );

        let dup = TxInput {
            txo: parent_txos[0],
            proof: parent_dense.proof(U256::zero()),
        };
        assert_eq!(
            tree.compute_block_delta(&parent, &[dup.clone(), dup], &[]).unwrap_err(),
            TreeError::DuplicateInput(U256::zero())
        );

        let preassigned = txo_at(7, 7, 7);
        assert_eq!(
            tree.compute_block_delta(&parent, &[], &[preassigned]).unwrap_err(),
            TreeError::PreassignedOutput
        );

        // 16 leaves at height 4; 14 more outputs fit, 15 overflow.
        let out = |n: u64| -> Vec<Txo> {
            (0..n)
                .map(|i| Txo::new_output(KeyPair::from_id(i).address(), U256::one(), Hash32::ZERO))
                .collect()
        };
        assert!(tree.compute_block_delta(&parent, &[], &out(13)).is_ok());
        assert_eq!(
            tree.compute_block_delta(&parent, &[], &out(14)).unwrap_err(),
            TreeError::CapacityExceeded
        );
    }

    #[test]
    fn update_proof_follows_sibling_changes() {
        let tree = TxoTree::new(4);
        // Two TXOs at sibling leaves 0 and 1; spending one must keep the
        // other's proof valid after the update.
        let a = txo_at(0, 1, 10);
        let b = txo_at(1, 2, 20);
        let parent_dense = DenseTree::build(&tree, &dense_leaves(&[a, b])).unwrap();
        let parent = block_of(&parent_dense, Hash32::ZERO, 1);

        let spend_b = TxInput {
            txo: b,
            proof: parent_dense.proof(U256::from(1u64)),
        };
        let pay = Txo::new_output(KeyPair::from_id(3).address(), U256::from(20u64), parent.hash());
        let comp = tree.compute_block_delta(&parent, &[spend_b], &[pay]).unwrap();

        let stale = parent_dense.proof(U256::zero());
        assert!(!tree
            .verify_proof(&a.leaf_hash_unused().unwrap(), U256::zero(), &stale, &comp.root)
            .unwrap());
        let fresh = update_proof(&stale, U256::zero(), &comp.delta);
        assert!(tree
            .verify_proof(&a.leaf_hash_unused().unwrap(), U256::zero(), &fresh, &comp.root)
            .unwrap());

        // The spent leaf now verifies as used, and no longer as unused.
        let b_proof = update_proof(&parent_dense.proof(U256::from(1u64)), U256::from(1u64), &comp.delta);
        assert!(tree
            .verify_proof(&b.leaf_hash_used().unwrap(), U256::from(1u64), &b_proof, &comp.root)
            .unwrap());
        assert!(!tree
            .verify_proof(&b.leaf_hash_unused().unwrap(), U256::from(1u64), &b_proof, &comp.root)
            .unwrap());

        // An empty delta is the identity.
        assert_eq!(update_proof(&stale, U256::zero(), &TreeDelta::default()), stale);
    }

    #[test]
    fn truncate_and_expand_round_trip() {
        let tree = TxoTree::new(8);
        let txos: Vec<Txo> = (0..6).map(|i| txo_at(i, i, 10)).collect();
        let dense = DenseTree::build(&tree, &dense_leaves(&txos)).unwrap();
        let tip = block_of(&dense, Hash32::ZERO, 5);

        // Leaf 4 shares the rightmost path above height 1 (4 and 5 merge
        // at height 1), so any truncation height >= 1 is recoverable.
        let full = dense.proof(U256::from(4u64));
        for trunc in [1u8, 3, 8] {
            let cut = truncate_proof(&full, trunc).unwrap();
            assert_eq!(cut.len(), trunc as usize);
            assert_eq!(cut.truncation_height(), Some(trunc));
            let back = expand_proof(&cut, &tip).unwrap();
            assert_eq!(back, full);
        }

        // Leaf 0 diverges from the frontier path at height 2: expanding a
        // height-1 truncation yields a proof that no longer verifies.
        let full0 = dense.proof(U256::zero());
        let cut0 = truncate_proof(&full0, 1).unwrap();
        let back0 = expand_proof(&cut0, &tip).unwrap();
        assert!(!tree
            .verify_proof(&txos[0].leaf_hash_unused().unwrap(), U256::zero(), &back0, &dense.root())
            .unwrap());
        let cut0_high = truncate_proof(&full0, 3).unwrap();
        let back0_high = expand_proof(&cut0_high, &tip).unwrap();
        assert_eq!(back0_high, full0);

        assert_eq!(expand_proof(&full, &tip), Err(TreeError::NotTruncated));
    }

    #[test]
    fn truncation_height_formula() {
        assert_eq!(truncation_height(604_800, 15, 10_000), 29);
        assert_eq!(truncation_height(4, 1, 4), 4);
        assert_eq!(truncation_height(1, 1, 2), 1);
    }

    #[test]
    fn delta_serialization_round_trip() {
        let tree = TxoTree::new(4);
        let out = Txo::new_output(KeyPair::from_id(1).address(), U256::from(7u64), Hash32::ZERO);
        let comp = tree
            .compute_block_delta(&tree.empty_block(), &[], &[out])
            .unwrap();
        let bytes = comp.delta.serialize();
        assert_eq!(bytes.len(), 4 + comp.delta.len() * 65);
        assert_eq!(TreeDelta::deserialize(&bytes).unwrap(), comp.delta);
    }
}
