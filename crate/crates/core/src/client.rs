//! Wallet-side state: the only party in the system that can prove its
//! own balance.
//!
//! A client tracks, per fork, which of its TXOs are unused, and keeps an
//! update history for every sibling node along each TXO's proof path:
//! `branch id → (block hash → node hash)`. Proofs are assembled on demand
//! by taking, for each sibling branch, the entry recorded at the nearest
//! ancestor of the target tip — histories recorded under one fork can
//! never leak into proofs under another.
//!
//! Histories live in two stores: device-resident memory and an external
//! archive. The per-block archiving pass rebuilds device memory around
//! the currently relevant proof paths and pushes everything else out; a
//! pruning pass additionally moves entries older than `h_archive` blocks
//! off device and deletes archived entries older than `h_delete`
//! (recoverable only from a full node afterwards).

use crate::chain::{derive_indexed_outputs, ChainConfig, Genesis};
use crate::full_node::{FullNodeStore, StoreError};
use crate::hash::Hash32;
use crate::keys::{Address, KeyPair};
use crate::tree::{truncate_proof, TreeDelta, TxoTree};
use crate::types::{Amount, Block, BranchId, LeafIndex, MerkleProof, Transaction, TxInput, Txo};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("insufficient balance: have {available}, need {needed}")]
    InsufficientBalance { available: Amount, needed: Amount },
    #[error("no usable proof history for leaf {0}; sync with a full node")]
    MissingProofHistory(LeafIndex),
    #[error("parent block {0} unknown; sync required")]
    UnknownParent(Hash32),
    #[error("block {0} unknown to this wallet")]
    UnknownBlock(Hash32),
    #[error("synced state fails proof verification at the target tip")]
    SyncInconsistent,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Thresholds of the archiving policy. Entries older than `h_archive`
/// blocks leave the device; archived entries older than `h_delete` are
/// deleted outright.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArchiveParams {
    pub h_archive: u64,
    pub h_delete: u64,
}

impl ArchiveParams {
    pub fn new(h_archive: u64, h_delete: u64) -> ArchiveParams {
        assert!(h_archive >= 1, "h_archive must be at least 1");
        assert!(h_delete > h_archive, "h_delete must exceed h_archive");
        ArchiveParams {
            h_archive,
            h_delete,
        }
    }
}

/// One of the client's two history stores. Size accounting counts the
/// stored node hashes (32 bytes each), matching how the storage model
/// counts them; lookup keys are bookkeeping, not payload.
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct HistoryStore {
    branches: BTreeMap<BranchId, BTreeMap<Hash32, Hash32>>,
    entries: usize,
}

impl HistoryStore {
    pub fn put(&mut self, branch: BranchId, block: Hash32, value: Hash32) {
        let history = self.branches.entry(branch).or_default();
        if history.insert(block, value).is_none() {
            self.entries += 1;
        }
    }

    pub fn get(&self, branch: &BranchId) -> Option<&BTreeMap<Hash32, Hash32>> {
        self.branches.get(branch)
    }

    pub fn contains(&self, branch: &BranchId) -> bool {
        self.branches.contains_key(branch)
    }

    pub fn insert_branch(&mut self, branch: BranchId, history: BTreeMap<Hash32, Hash32>) {
        if let Some(old) = self.branches.insert(branch, history) {
            self.entries -= old.len();
        }
        self.entries += self.branches[&branch].len();
    }

    /// Merges `history` into the branch, keeping existing entries.
    pub fn merge_branch(&mut self, branch: BranchId, history: &BTreeMap<Hash32, Hash32>) {
        let target = self.branches.entry(branch).or_default();
        for (block, value) in history {
            if target.insert(*block, *value).is_none() {
                self.entries += 1;
            }
        }
    }

    pub fn delete(&mut self, branch: &BranchId, block: &Hash32) {
        if let Some(history) = self.branches.get_mut(branch) {
            if history.remove(block).is_some() {
                self.entries -= 1;
            }
            if history.is_empty() {
                self.branches.remove(branch);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BranchId, &BTreeMap<Hash32, Hash32>)> {
        self.branches.iter()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn entry_count(&self) -> usize {
        self.entries
    }

    /// 32 bytes per stored node hash.
    pub fn total_bytes(&self) -> usize {
        self.entries * 32
    }
}

/// A TXO of ours that was spent, and where.
#[derive(Clone, Copy, Debug)]
pub struct UsedTxo {
    pub txo: Txo,
    pub spent_in: Hash32,
}

#[derive(Clone, Debug)]
struct BlockRecord {
    block: Block,
    parent: Hash32,
    height: u64,
    seen: u64,
}

/// What a client asks a node after hearing about a new block: its own
/// address plus the sibling branches of its current TXOs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubscriptionRequest {
    pub block_hash: Hash32,
    pub address: Address,
    pub branch_ids: Vec<BranchId>,
}

/// The filtered per-block update a node sends back.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SubscriptionResponse {
    pub new_txos: Vec<Txo>,
    pub used_txos: Vec<Txo>,
    pub node_hashes: TreeDelta,
}

/// Node-side filtering of a block's artifacts down to one subscriber:
/// TXOs whose owner matches, delta entries on the requested branches,
/// and — so a fresh TXO is provable without a second round trip — the
/// path siblings of any new TXO being handed to this subscriber.
pub fn filter_block_update(
    request: &SubscriptionRequest,
    height: u8,
    outputs: &[Txo],
    spent: &[Txo],
    delta: &TreeDelta,
) -> SubscriptionResponse {
    let new_txos: Vec<Txo> = outputs
        .iter()
        .filter(|t| t.owner == request.address)
        .copied()
        .collect();
    let used_txos: Vec<Txo> = spent
        .iter()
        .filter(|t| t.owner == request.address)
        .copied()
        .collect();
    let mut node_hashes = TreeDelta::default();
    for id in &request.branch_ids {
        if let Some(value) = delta.get(id) {
            node_hashes.insert(*id, *value);
        }
    }
    for txo in &new_txos {
        let leaf = txo.index.expect("block outputs are indexed");
        for h in 0..height {
            let id = BranchId::path_sibling(leaf, h);
            if let Some(value) = delta.get(&id) {
                node_hashes.insert(id, *value);
            }
        }
    }
    SubscriptionResponse {
        new_txos,
        used_txos,
        node_hashes,
    }
}

/// The wallet.
pub struct ClientState {
    keypair: KeyPair,
    address: Address,
    tree: TxoTree,
    config: ChainConfig,
    latest: Hash32,
    blocks: HashMap<Hash32, BlockRecord>,
    children: HashMap<Hash32, Vec<Hash32>>,
    seen_counter: u64,
    /// Own unused TXOs as of each known block.
    unused: HashMap<Hash32, Vec<Txo>>,
    used: BTreeMap<LeafIndex, UsedTxo>,
    memory: HistoryStore,
    archive: HistoryStore,
}

impl ClientState {
    pub fn new(keypair: KeyPair, config: ChainConfig, genesis: &Genesis) -> ClientState {
        let address = keypair.address();
        let tree = config.tree();
        let genesis_hash = genesis.block.hash();
        let mut client = ClientState {
            keypair,
            address,
            tree,
            config,
            latest: genesis_hash,
            blocks: HashMap::new(),
            children: HashMap::new(),
            seen_counter: 0,
            unused: HashMap::new(),
            used: BTreeMap::new(),
            memory: HistoryStore::default(),
            archive: HistoryStore::default(),
        };
        client.blocks.insert(
            genesis_hash,
            BlockRecord {
                block: genesis.block.clone(),
                parent: Hash32::ZERO,
                height: 0,
                seen: 0,
            },
        );
        client.seen_counter = 1;
        let own: Vec<Txo> = genesis
            .outputs
            .iter()
            .filter(|t| t.owner == address)
            .copied()
            .collect();
        client.unused.insert(genesis_hash, own);
        client.record_histories(genesis_hash, &genesis.delta);
        client
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn latest(&self) -> Hash32 {
        self.latest
    }

    pub fn latest_block(&self) -> &Block {
        &self.blocks[&self.latest].block
    }

    pub fn height_of(&self, hash: &Hash32) -> Option<u64> {
        self.blocks.get(hash).map(|r| r.height)
    }

    pub fn knows_block(&self, hash: &Hash32) -> bool {
        self.blocks.contains_key(hash)
    }

    pub fn unused_at(&self, tip: &Hash32) -> &[Txo] {
        self.unused.get(tip).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn balance_at(&self, tip: &Hash32) -> Amount {
        self.unused_at(tip)
            .iter()
            .fold(Amount::zero(), |a, t| a + t.balance)
    }

    pub fn balance(&self) -> Amount {
        self.balance_at(&self.latest)
    }

    pub fn used_txos(&self) -> impl Iterator<Item = &UsedTxo> {
        self.used.values()
    }

    pub fn memory(&self) -> &HistoryStore {
        &self.memory
    }

    pub fn archive(&self) -> &HistoryStore {
        &self.archive
    }

    /// Tips of every fork this wallet knows: blocks with no known child,
    /// in first-seen order.
    pub fn fork_tips(&self) -> Vec<Hash32> {
        let mut tips: Vec<&BlockRecord> = self
            .blocks
            .values()
            .filter(|r| !self.children.contains_key(&r.block.hash()))
            .collect();
        tips.sort_by_key(|r| r.seen);
        tips.iter().map(|r| r.block.hash()).collect()
    }

    fn best_tip(&self) -> Hash32 {
        let mut best: Option<&BlockRecord> = None;
        for record in self.blocks.values() {
            let hash = record.block.hash();
            if self.children.contains_key(&hash) {
                continue;
            }
            best = match best {
                None => Some(record),
                Some(cur)
                    if record.height > cur.height
                        || (record.height == cur.height && record.seen < cur.seen) =>
                {
                    Some(record)
                }
                Some(cur) => Some(cur),
            };
        }
        best.map(|r| r.block.hash()).unwrap_or(self.latest)
    }

    /// Device-resident bytes, counted the way the storage model counts
    /// them: 32 per history entry in memory plus 128 per unused TXO at
    /// each fork tip.
    pub fn device_bytes(&self) -> usize {
        let txo_bytes: usize = self
            .fork_tips()
            .iter()
            .map(|t| self.unused_at(t).len() * Txo::LEN)
            .sum();
        self.memory.total_bytes() + txo_bytes
    }

    /// External-storage bytes: 32 per archived history entry plus 128 per
    /// spent TXO retained for the record.
    pub fn archive_bytes(&self) -> usize {
        self.archive.total_bytes() + self.used.len() * Txo::LEN
    }

    // -----------------------------------------------------------------
    // Per-block update

    /// Applies one block's filtered (or full) update. `new_txos` and
    /// `used_txos` may contain other parties' TXOs; only ours are kept.
    /// The parent must already be known, otherwise the caller has to sync
    /// first.
    pub fn on_block(
        &mut self,
        block: &Block,
        new_txos: &[Txo],
        used_txos: &[Txo],
        node_hashes: &TreeDelta,
    ) -> Result<(), WalletError> {
        let hash = block.hash();
        if self.blocks.contains_key(&hash) {
            return Ok(());
        }
        let parent_height = self
            .blocks
            .get(&block.parent)
            .ok_or(WalletError::UnknownParent(block.parent))?
            .height;

        self.blocks.insert(
            hash,
            BlockRecord {
                block: block.clone(),
                parent: block.parent,
                height: parent_height + 1,
                seen: self.seen_counter,
            },
        );
        self.seen_counter += 1;
        self.children.entry(block.parent).or_default().push(hash);

        let mut list = self.unused.get(&block.parent).cloned().unwrap_or_default();
        for txo in used_txos.iter().filter(|t| t.owner == self.address) {
            let index = txo.index.expect("spent TXOs are indexed");
            list.retain(|t| t.index != Some(index));
            self.used.insert(
                index,
                UsedTxo {
                    txo: *txo,
                    spent_in: hash,
                },
            );
        }
        for txo in new_txos.iter().filter(|t| t.owner == self.address) {
            assert!(txo.index.is_some(), "block outputs carry indexes");
            list.push(*txo);
        }
        self.unused.insert(hash, list);

        self.record_histories(hash, node_hashes);
        self.latest = self.best_tip();
        Ok(())
    }

    /// Records the sibling-path updates for every unused TXO as of
    /// `block_hash`.
    fn record_histories(&mut self, block_hash: Hash32, node_hashes: &TreeDelta) {
        let list = self.unused.get(&block_hash).cloned().unwrap_or_default();
        for txo in list {
            let leaf = txo.index.unwrap();
            for h in 0..self.tree.height() {
                let id = BranchId::path_sibling(leaf, h);
                if let Some(value) = node_hashes.get(&id) {
                    self.memory.put(id, block_hash, *value);
                }
            }
        }
    }

    /// Sibling branches of every unused TXO at `tip`, deduplicated, in
    /// (height, index) order.
    pub fn watched_branches(&self, tip: &Hash32) -> Vec<BranchId> {
        let mut ids = std::collections::BTreeSet::new();
        for txo in self.unused_at(tip) {
            let leaf = txo.index.unwrap();
            for h in 0..self.tree.height() {
                ids.insert(BranchId::path_sibling(leaf, h));
            }
        }
        ids.into_iter().collect()
    }

    /// The message sent to a node on hearing about block `block_hash`:
    /// our address and the branches we need updates for (based on the tip
    /// we currently stand on).
    pub fn subscription_request(&self, block_hash: Hash32) -> SubscriptionRequest {
        SubscriptionRequest {
            block_hash,
            address: self.address,
            branch_ids: self.watched_branches(&self.latest),
        }
    }

    // -----------------------------------------------------------------
    // Proof assembly

    /// Looks up the value of `branch` as of `tip`: the entry recorded at
    /// the nearest ancestor of `tip`, searching device memory first, then
    /// the archive. `None` means no history — the node has held its null
    /// value for the whole known ancestry.
    fn branch_value_at(&self, branch: &BranchId, tip: &Hash32) -> Option<Hash32> {
        let memory = self.memory.get(branch);
        let archive = self.archive.get(branch);
        if memory.is_none() && archive.is_none() {
            return None;
        }
        let mut cursor = *tip;
        loop {
            if let Some(value) = memory.and_then(|h| h.get(&cursor)) {
                return Some(*value);
            }
            if let Some(value) = archive.and_then(|h| h.get(&cursor)) {
                return Some(*value);
            }
            match self.blocks.get(&cursor) {
                Some(record) if record.height > 0 => cursor = record.parent,
                _ => return None,
            }
        }
    }

    /// Assembles the full proof of `leaf` as of `tip` from the recorded
    /// histories; branches with no recorded update take the null hash of
    /// their height.
    pub fn assemble_proof(&self, leaf: LeafIndex, tip: &Hash32) -> MerkleProof {
        let siblings = (0..self.tree.height())
            .map(|h| {
                self.branch_value_at(&BranchId::path_sibling(leaf, h), tip)
                    .unwrap_or_else(|| self.tree.null_at(h))
            })
            .collect();
        MerkleProof::full(siblings)
    }

    /// Assembles and checks the proof of one of our unused TXOs against
    /// the tip's root.
    pub fn proven_input(&self, txo: &Txo, tip: &Hash32) -> Result<TxInput, WalletError> {
        let leaf = txo.index.expect("unused TXOs are indexed");
        let proof = self.assemble_proof(leaf, tip);
        let root = self
            .blocks
            .get(tip)
            .ok_or(WalletError::UnknownBlock(*tip))?
            .block
            .root;
        let ok = self
            .tree
            .verify_proof(&txo.leaf_hash_unused().unwrap(), leaf, &proof, &root)
            .unwrap_or(false);
        if !ok {
            return Err(WalletError::MissingProofHistory(leaf));
        }
        Ok(TxInput { txo: *txo, proof })
    }

    /// Checks that every unused TXO at `tip` has a verifying proof.
    pub fn verify_own_proofs(&self, tip: &Hash32) -> Result<(), WalletError> {
        for txo in self.unused_at(tip).to_vec() {
            self.proven_input(&txo, tip)?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // Transaction creation

    /// Builds and signs a transaction paying `payments` plus `fee`,
    /// anchored at the current tip. Inputs are selected largest-first to
    /// keep the input count (and per-input fees) down; change merges into
    /// a single output back to us, omitted when exactly zero.
    pub fn create_transaction(
        &self,
        payments: &[(Address, Amount)],
        fee: Amount,
    ) -> Result<Transaction, WalletError> {
        let tip = self.latest;
        let tip_block = &self.blocks[&tip].block;

        let mut needed = fee;
        for (_, amount) in payments {
            needed = needed
                .checked_add(*amount)
                .ok_or(WalletError::InsufficientBalance {
                    available: self.balance(),
                    needed: Amount::MAX,
                })?;
        }

        let mut candidates = self.unused_at(&tip).to_vec();
        candidates.sort_by(|a, b| b.balance.cmp(&a.balance).then(a.index.cmp(&b.index)));
        let mut selected = Vec::new();
        let mut covered = Amount::zero();
        for txo in candidates {
            if covered >= needed {
                break;
            }
            covered = covered + txo.balance;
            selected.push(txo);
        }
        if covered < needed {
            return Err(WalletError::InsufficientBalance {
                available: covered,
                needed,
            });
        }

        let trunc_height = self.config.trunc.height();
        let mut inputs = Vec::with_capacity(selected.len());
        for txo in &selected {
            let mut input = self.proven_input(txo, &tip)?;
            // Drop the proof suffix only when it provably coincides with
            // the tip's rightmost proof.
            if (trunc_height as usize) < self.tree.height() as usize
                && input.proof.siblings()[trunc_height as usize..]
                    == tip_block.rightmost_proof.siblings()[trunc_height as usize..]
            {
                input.proof = truncate_proof(&input.proof, trunc_height).unwrap();
            }
            inputs.push(input);
        }

        let mut outputs: Vec<Txo> = payments
            .iter()
            .map(|(to, amount)| Txo::new_output(*to, *amount, tip))
            .collect();
        let change = covered - needed;
        if !change.is_zero() {
            outputs.push(Txo::new_output(self.address, change, tip));
        }

        let mut tx = Transaction {
            block_hash: tip,
            inputs,
            outputs,
            sigs: vec![],
        };
        tx.sign_with(&self.keypair);
        Ok(tx)
    }

    // -----------------------------------------------------------------
    // Archiving

    /// Rebuilds device memory around the proof paths of the TXOs unused
    /// as of `block_hash`, folding in that block's node hashes; histories
    /// no longer on any watched path move to the archive. Bookkeeping for
    /// the block itself must have run first.
    pub fn archive_update(&mut self, block_hash: &Hash32, node_hashes: &TreeDelta) {
        let mut fresh = HistoryStore::default();
        let txos = self.unused.get(block_hash).cloned().unwrap_or_default();
        for txo in txos {
            let mut index = txo.index.unwrap();
            for h in 0..self.tree.height() {
                index = if index.bit(0) { index - 1 } else { index + 1 };
                let id = BranchId::new(h, index);

                let history: Option<BTreeMap<Hash32, Hash32>> =
                    if let Some(mem) = self.memory.get(&id) {
                        let mut updates = mem.clone();
                        if let Some(value) = node_hashes.get(&id) {
                            updates.insert(*block_hash, *value);
                        }
                        Some(updates)
                    } else if let Some(value) = node_hashes.get(&id) {
                        let mut updates = self.archive.get(&id).cloned().unwrap_or_default();
                        updates.insert(*block_hash, *value);
                        Some(updates)
                    } else {
                        self.archive.get(&id).cloned()
                    };
                if let Some(history) = history {
                    fresh.insert_branch(id, history);
                }
                index = index >> 1;
            }
        }
        for (id, history) in self.memory.iter() {
            if !fresh.contains(id) {
                self.archive.merge_branch(*id, history);
            }
        }
        self.memory = fresh;
    }

    /// Moves memory entries recorded in blocks older than
    /// `h_latest − h_archive` to the archive, and deletes archived
    /// entries older than `h_latest − h_delete`.
    pub fn prune_and_delete(&mut self, params: &ArchiveParams, h_latest: u64) {
        let archive_below = h_latest.saturating_sub(params.h_archive);
        if archive_below > 0 {
            let mut moved: Vec<(BranchId, Hash32, Hash32)> = Vec::new();
            for (id, history) in self.memory.iter() {
                for (block, value) in history {
                    match self.blocks.get(block) {
                        Some(record) if record.height < archive_below => {
                            moved.push((*id, *block, *value));
                        }
                        _ => {}
                    }
                }
            }
            for (id, block, value) in moved {
                self.memory.delete(&id, &block);
                self.archive.put(id, block, value);
            }
        }

        let delete_below = h_latest.saturating_sub(params.h_delete);
        if delete_below > 0 {
            let mut doomed: Vec<(BranchId, Hash32)> = Vec::new();
            for (id, history) in self.archive.iter() {
                for block in history.keys() {
                    match self.blocks.get(block) {
                        Some(record) if record.height < delete_below => {
                            doomed.push((*id, *block));
                        }
                        _ => {}
                    }
                }
            }
            for (id, block) in doomed {
                self.archive.delete(&id, &block);
            }
        }
    }

    /// Refetches the full history needed to prove `leaf` from a full
    /// node, for TXOs whose archived history was already deleted.
    pub fn recover_proof_history(
        &mut self,
        store: &FullNodeStore,
        leaf: LeafIndex,
    ) -> Result<(), WalletError> {
        let genesis = store.genesis_hash();
        let branches: Vec<BranchId> = (0..self.tree.height())
            .map(|h| BranchId::path_sibling(leaf, h))
            .collect();
        let updates = store.latest_updates(&branches, &genesis, &self.latest)?;
        for (id, (block, value)) in updates {
            self.memory.put(id, block, value);
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // Sync

    /// Catches up from `from` (a block we already know) to `to` along the
    /// full node's chain: downloads the missing blocks, rederives our
    /// incoming and outgoing TXOs from the stored transactions, fetches
    /// the latest update for every watched branch on the interval, and
    /// lands on `to` with verifying proofs.
    pub fn sync(
        &mut self,
        store: &FullNodeStore,
        from: Hash32,
        to: Hash32,
    ) -> Result<usize, WalletError> {
        if !self.blocks.contains_key(&from) {
            return Err(WalletError::UnknownBlock(from));
        }
        if from == to {
            return Ok(0);
        }
        let path = store.ancestry(&from, &to)?;
        let mut fetched = 0;

        for hash in &path {
            if self.blocks.contains_key(hash) {
                continue;
            }
            let block = store.get_block(hash)?.clone();
            let txs = store.get_transactions(hash)?;
            let parent_block = &self
                .blocks
                .get(&block.parent)
                .ok_or(WalletError::UnknownParent(block.parent))?
                .block
                .clone();
            // Output indexes are rederivable from order alone.
            let outputs = derive_indexed_outputs(parent_block, txs);
            let spent: Vec<Txo> = txs.iter().flat_map(|t| t.inputs.iter().map(|i| i.txo)).collect();
            self.on_block(&block, &outputs, &spent, &TreeDelta::default())?;
            fetched += 1;
        }

        let branches = self.watched_branches(&to);
        if !branches.is_empty() {
            let updates = store.latest_updates(&branches, &from, &to)?;
            for (id, (block, value)) in updates {
                self.memory.put(id, block, value);
            }
        }

        self.latest = to;
        self.verify_own_proofs(&to)
            .map_err(|_| WalletError::SyncInconsistent)?;
        Ok(fetched)
    }

    /// Syncs to `to` without knowing the fork point: finds the nearest
    /// ancestor of `to` that we already know and syncs from there.
    pub fn resync(&mut self, store: &FullNodeStore, to: Hash32) -> Result<usize, WalletError> {
        let mut cursor = to;
        loop {
            if self.blocks.contains_key(&cursor) {
                break;
            }
            let block = store.get_block(&cursor)?;
            if block.parent == Hash32::ZERO {
                return Err(WalletError::UnknownBlock(to));
            }
            cursor = block.parent;
        }
        self.sync(store, cursor, to)
    }
}
