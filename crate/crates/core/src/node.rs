//! The block proposer/validator.
//!
//! A node retains exactly one block and a mempool: no past transactions,
//! no balances, no tree nodes beyond the latest block's own fields. It
//! validates incoming transactions with the five protocol checks plus
//! signature verification, keeps pending proofs fresh as blocks land,
//! proposes blocks by recomputing the sparse root, and validates received
//! blocks by recomputing every derived field and demanding byte equality.

use crate::chain::{derive_indexed_outputs, fee_of, ChainConfig};
use crate::hash::Hash32;
use crate::keys::Address;
use crate::tree::{expand_proof, update_proof, TreeDelta, TreeError, TxoTree};
use crate::types::{Amount, Block, BranchId, LeafIndex, ShortId, Transaction, TxId, TxInput, Txo};
use std::collections::BTreeSet;
use thiserror::Error;

/// Transaction rejection reasons. The first five correspond to the five
/// protocol checks; [`TxError::check_number`] reports which.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxError {
    #[error("anchor {got} does not match the latest block {expected}")]
    BadAnchor { expected: Hash32, got: Hash32 },
    #[error("input leaf {0} is already spent by a pending transaction")]
    DoubleSpendInMempool(LeafIndex),
    #[error("input proof for leaf {0} does not reach the latest root")]
    InvalidProof(LeafIndex),
    #[error("outputs plus the minimum fee exceed inputs")]
    InsufficientValue,
    #[error("input leaf {0} lies beyond the rightmost assigned leaf")]
    IndexBeyondFrontier(LeafIndex),
    #[error("no signature from owner {0}")]
    MissingSignature(Address),
    #[error("invalid signature from owner {0}")]
    BadSignature(Address),
    #[error("malformed transaction: {0}")]
    Malformed(&'static str),
}

impl TxError {
    /// Protocol check number (1-5) this error corresponds to, if any.
    pub fn check_number(&self) -> Option<u8> {
        match self {
            TxError::BadAnchor { .. } => Some(1),
            TxError::DoubleSpendInMempool(_) => Some(2),
            TxError::InvalidProof(_) => Some(3),
            TxError::InsufficientValue => Some(4),
            TxError::IndexBeyondFrontier(_) => Some(5),
            _ => None,
        }
    }
}

/// Block rejection reasons.
#[derive(Debug, Error)]
pub enum ApplyError {
    /// The parent is not our tip; the caller should sync.
    #[error("unknown parent {0}")]
    UnknownParent(Hash32),
    #[error("transaction {index} invalid: {source}")]
    TxInvalid { index: usize, source: TxError },
    #[error("root recomputation failed: {0}")]
    Recompute(#[from] TreeError),
    #[error("recomputed {field} does not match the received block")]
    FieldMismatch { field: &'static str },
    #[error("reward configuration mismatch: {0}")]
    RewardConfig(&'static str),
}

/// A block the node assembled, with everything peers and clients need.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub block: Block,
    /// Approved transactions in proposer order (output indexes depend on
    /// this order, so it is normative and travels on the wire).
    pub txs: Vec<Transaction>,
    pub delta: TreeDelta,
    pub indexed_outputs: Vec<Txo>,
    pub spent: Vec<Txo>,
    pub fees: Amount,
}

/// Result of accepting a block.
#[derive(Clone, Debug)]
pub struct AppliedBlock {
    pub delta: TreeDelta,
    pub indexed_outputs: Vec<Txo>,
    pub spent: Vec<Txo>,
    pub fees: Amount,
    /// Mempool transactions dropped during the refresh, with reasons.
    pub dropped: Vec<(TxId, DropReason)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DropReason {
    /// An input was spent by the accepted block (this also covers the
    /// transaction itself being included).
    SpentByBlock,
    /// The refreshed transaction no longer validates.
    Invalid(TxError),
}

struct MempoolEntry {
    tx: Transaction,
    txid: TxId,
    arrival: u64,
}

/// Validator/proposer state: the latest block, a mempool, and the chain
/// configuration. Nothing else survives a block transition.
pub struct NodeState {
    tree: TxoTree,
    config: ChainConfig,
    latest: Block,
    latest_hash: Hash32,
    mempool: Vec<MempoolEntry>,
    arrivals: u64,
}

impl NodeState {
    pub fn new(config: ChainConfig, genesis: &Block) -> NodeState {
        let tree = config.tree();
        NodeState {
            tree,
            latest_hash: genesis.hash(),
            latest: genesis.clone(),
            config,
            mempool: Vec::new(),
            arrivals: 0,
        }
    }

    pub fn latest(&self) -> &Block {
        &self.latest
    }

    pub fn latest_hash(&self) -> Hash32 {
        self.latest_hash
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn tree(&self) -> &TxoTree {
        &self.tree
    }

    pub fn mempool_txs(&self) -> impl Iterator<Item = &Transaction> {
        self.mempool.iter().map(|e| &e.tx)
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    /// Bytes of retained protocol state: the serialized latest block plus
    /// the serialized mempool. There is nothing else to count.
    pub fn storage_bytes(&self) -> usize {
        self.latest.serialize().len()
            + self
                .mempool
                .iter()
                .map(|e| e.tx.serialize().len())
                .sum::<usize>()
    }

    /// Runs the five protocol checks and signature verification against
    /// the current tip and mempool. On success returns the transaction in
    /// mempool form: proofs expanded to full length.
    pub fn validate_transaction(&self, tx: &Transaction) -> Result<Transaction, TxError> {
        let pending: BTreeSet<LeafIndex> = self
            .mempool
            .iter()
            .flat_map(|e| e.tx.inputs.iter().filter_map(|i| i.txo.index))
            .collect();
        validate_against(&self.tree, &self.config, &self.latest, self.latest_hash, &pending, tx)
    }

    /// Validates and stores a transaction. Re-submitting a byte-identical
    /// transaction is accepted idempotently.
    pub fn accept_transaction(&mut self, tx: &Transaction) -> Result<TxId, TxError> {
        let incoming = tx.txid();
        if let Some(entry) = self.mempool.iter().find(|e| e.txid == incoming) {
            return Ok(entry.txid);
        }
        let expanded = self.validate_transaction(tx)?;
        let txid = expanded.txid();
        self.mempool.push(MempoolEntry {
            tx: expanded,
            txid,
            arrival: self.arrivals,
        });
        self.arrivals += 1;
        Ok(txid)
    }

    /// Assembles a block from the whole mempool in arrival order. An empty
    /// mempool yields an empty block that carries the parent's tree fields
    /// forward. `reward_to` must be given exactly when the chain mints
    /// fees to the proposer.
    pub fn propose(&self, reward_to: Option<Address>) -> Result<Proposal, ApplyError> {
        let txs: Vec<Transaction> = self.mempool.iter().map(|e| e.tx.clone()).collect();
        self.build_block(txs, reward_to)
    }

    /// Like [`NodeState::propose`] but only over the listed transactions.
    /// Used by harnesses that hold transactions out of blocks.
    pub fn propose_subset(
        &self,
        include: &BTreeSet<TxId>,
        reward_to: Option<Address>,
    ) -> Result<Proposal, ApplyError> {
        let txs: Vec<Transaction> = self
            .mempool
            .iter()
            .filter(|e| include.contains(&e.txid))
            .map(|e| e.tx.clone())
            .collect();
        self.build_block(txs, reward_to)
    }

    fn reward_output(
        &self,
        txs: &[Transaction],
        reward_to: Option<Address>,
    ) -> Result<(Option<Txo>, Amount), ApplyError> {
        let mut fees = Amount::zero();
        for tx in txs {
            fees = fees
                .checked_add(fee_of(tx).unwrap_or_default())
                .ok_or(ApplyError::RewardConfig("fee sum overflow"))?;
        }
        match (self.config.reward_to_proposer, reward_to) {
            (false, None) => Ok((None, fees)),
            (true, Some(addr)) => {
                if fees.is_zero() {
                    Ok((None, fees))
                } else {
                    Ok((Some(Txo::new_output(addr, fees, self.latest_hash)), fees))
                }
            }
            (false, Some(_)) => Err(ApplyError::RewardConfig("chain burns fees")),
            (true, None) => Err(ApplyError::RewardConfig("proposer address required")),
        }
    }

    fn build_block(
        &self,
        txs: Vec<Transaction>,
        reward_to: Option<Address>,
    ) -> Result<Proposal, ApplyError> {
        let (reward, fees) = self.reward_output(&txs, reward_to)?;
        let spent: Vec<TxInput> = txs.iter().flat_map(|t| t.inputs.iter().cloned()).collect();
        let mut created: Vec<Txo> = txs.iter().flat_map(|t| t.outputs.iter().copied()).collect();
        if let Some(r) = reward {
            created.push(r);
        }

        if spent.is_empty() && created.is_empty() {
            // Empty block: the tree is untouched.
            let block = Block {
                parent: self.latest_hash,
                root: self.latest.root,
                rightmost_index: self.latest.rightmost_index,
                rightmost_hash: self.latest.rightmost_hash,
                rightmost_proof: self.latest.rightmost_proof.clone(),
            };
            return Ok(Proposal {
                block,
                txs,
                delta: TreeDelta::default(),
                indexed_outputs: Vec::new(),
                spent: Vec::new(),
                fees: Amount::zero(),
            });
        }

        let comp = self.tree.compute_block_delta(&self.latest, &spent, &created)?;
        let block = Block {
            parent: self.latest_hash,
            root: comp.root,
            rightmost_index: Some(comp.rightmost_index),
            rightmost_hash: comp.rightmost_hash,
            rightmost_proof: comp.rightmost_proof,
        };
        Ok(Proposal {
            block,
            txs,
            delta: comp.delta,
            indexed_outputs: comp.indexed_outputs,
            spent: spent.into_iter().map(|i| i.txo).collect(),
            fees,
        })
    }

    /// Adopts a block this node proposed itself, skipping re-validation.
    pub fn adopt_proposal(&mut self, proposal: &Proposal) -> AppliedBlock {
        self.latest = proposal.block.clone();
        self.latest_hash = proposal.block.hash();
        let dropped = self.refresh_mempool(&proposal.delta);
        AppliedBlock {
            delta: proposal.delta.clone(),
            indexed_outputs: proposal.indexed_outputs.clone(),
            spent: proposal.spent.clone(),
            fees: proposal.fees,
            dropped,
        }
    }

    /// Validates a received block by full recomputation: every transaction
    /// is re-checked against our tip (with intra-list conflict detection),
    /// the root computation is re-run, and all derived fields must match
    /// the received block byte for byte. On acceptance the tip advances
    /// and the mempool is refreshed.
    pub fn apply_block(
        &mut self,
        block: &Block,
        txs: &[Transaction],
        reward_to: Option<Address>,
    ) -> Result<AppliedBlock, ApplyError> {
        if block.parent != self.latest_hash {
            return Err(ApplyError::UnknownParent(block.parent));
        }

        let mut pending: BTreeSet<LeafIndex> = BTreeSet::new();
        let mut expanded = Vec::with_capacity(txs.len());
        for (index, tx) in txs.iter().enumerate() {
            let valid = validate_against(
                &self.tree,
                &self.config,
                &self.latest,
                self.latest_hash,
                &pending,
                tx,
            )
            .map_err(|source| ApplyError::TxInvalid { index, source })?;
            pending.extend(valid.inputs.iter().filter_map(|i| i.txo.index));
            expanded.push(valid);
        }

        let rebuilt = self.build_block(expanded, reward_to)?;
        if rebuilt.block.root != block.root {
            return Err(ApplyError::FieldMismatch { field: "root" });
        }
        if rebuilt.block.rightmost_index != block.rightmost_index {
            return Err(ApplyError::FieldMismatch {
                field: "rightmost_index",
            });
        }
        if rebuilt.block.rightmost_hash != block.rightmost_hash {
            return Err(ApplyError::FieldMismatch {
                field: "rightmost_hash",
            });
        }
        if rebuilt.block.rightmost_proof != block.rightmost_proof {
            return Err(ApplyError::FieldMismatch {
                field: "rightmost_proof",
            });
        }

        self.latest = block.clone();
        self.latest_hash = block.hash();
        let dropped = self.refresh_mempool(&rebuilt.delta);
        Ok(AppliedBlock {
            delta: rebuilt.delta,
            indexed_outputs: rebuilt.indexed_outputs,
            spent: rebuilt.spent,
            fees: rebuilt.fees,
            dropped,
        })
    }

    /// Rebases every pending transaction onto the new tip: proofs are
    /// folded through the block's delta, anchors are rewritten, and
    /// anything spent by the block or no longer valid is dropped. The tip
    /// fields must already point at the new block.
    fn refresh_mempool(&mut self, delta: &TreeDelta) -> Vec<(TxId, DropReason)> {
        let entries = std::mem::take(&mut self.mempool);
        let mut dropped = Vec::new();
        let mut pending: BTreeSet<LeafIndex> = BTreeSet::new();

        'entries: for mut entry in entries {
            for input in &entry.tx.inputs {
                let index = input.txo.index.expect("mempool inputs are indexed");
                let used = input.txo.leaf_hash_used().unwrap();
                if delta.get(&BranchId::new(0, index)) == Some(&used) {
                    dropped.push((entry.txid, DropReason::SpentByBlock));
                    continue 'entries;
                }
            }
            for input in &mut entry.tx.inputs {
                input.proof = update_proof(&input.proof, input.txo.index.unwrap(), delta);
            }
            entry.tx.block_hash = self.latest_hash;

            match validate_against(
                &self.tree,
                &self.config,
                &self.latest,
                self.latest_hash,
                &pending,
                &entry.tx,
            ) {
                Ok(tx) => {
                    pending.extend(tx.inputs.iter().filter_map(|i| i.txo.index));
                    entry.txid = tx.txid();
                    entry.tx = tx;
                    self.mempool.push(entry);
                }
                Err(e) => dropped.push((entry.txid, DropReason::Invalid(e))),
            }
        }
        dropped
    }

    /// Switches to a different tip (fork adoption). The mempool is
    /// re-validated against the new tip; transactions anchored elsewhere
    /// drop out and must be re-injected by their owners.
    pub fn reset_to_tip(&mut self, block: &Block) -> Vec<(TxId, DropReason)> {
        self.latest = block.clone();
        self.latest_hash = block.hash();
        let entries = std::mem::take(&mut self.mempool);
        let mut dropped = Vec::new();
        let mut pending: BTreeSet<LeafIndex> = BTreeSet::new();
        for entry in entries {
            match validate_against(
                &self.tree,
                &self.config,
                &self.latest,
                self.latest_hash,
                &pending,
                &entry.tx,
            ) {
                Ok(tx) => {
                    pending.extend(tx.inputs.iter().filter_map(|i| i.txo.index));
                    self.mempool.push(MempoolEntry {
                        txid: tx.txid(),
                        tx,
                        arrival: entry.arrival,
                    });
                }
                Err(e) => dropped.push((entry.txid, DropReason::Invalid(e))),
            }
        }
        dropped
    }

    /// Resolves a compact block against the mempool. Returns the
    /// transactions found (in compact order) and the short ids that could
    /// not be resolved — including ids whose prefix matches more than one
    /// pending transaction, which must be fetched in full.
    pub fn decode_compact(
        &self,
        compact: &CompactBlock,
    ) -> (Vec<Option<Transaction>>, Vec<ShortId>) {
        let mut resolved = Vec::with_capacity(compact.short_ids.len());
        let mut missing = Vec::new();
        for id in &compact.short_ids {
            let mut matches = self.mempool.iter().filter(|e| id.matches(&e.txid));
            match (matches.next(), matches.next()) {
                (Some(entry), None) => resolved.push(Some(entry.tx.clone())),
                _ => {
                    resolved.push(None);
                    missing.push(*id);
                }
            }
        }
        (resolved, missing)
    }
}

/// The five protocol checks plus signature verification, evaluated
/// cheapest first (1, 2, 5, 4, 3, signatures) so each failure surfaces
/// its own check number. Returns the transaction with proofs expanded to
/// full length.
pub fn validate_against(
    tree: &TxoTree,
    config: &ChainConfig,
    latest: &Block,
    latest_hash: Hash32,
    pending_inputs: &BTreeSet<LeafIndex>,
    tx: &Transaction,
) -> Result<Transaction, TxError> {
    if tx.inputs.is_empty() {
        return Err(TxError::Malformed("no inputs"));
    }
    if tx.outputs.is_empty() {
        return Err(TxError::Malformed("no outputs"));
    }
    for input in &tx.inputs {
        if input.txo.index.is_none() {
            return Err(TxError::Malformed("unassigned input index"));
        }
    }
    if tx.outputs.iter().any(|o| o.index.is_some()) {
        return Err(TxError::Malformed("output carries an index"));
    }
    let total_in = tx
        .total_input()
        .ok_or(TxError::Malformed("input value overflow"))?;
    let total_out = tx
        .total_output()
        .ok_or(TxError::Malformed("output value overflow"))?;

    // Check 1: anchored at our latest block.
    if tx.block_hash != latest_hash {
        return Err(TxError::BadAnchor {
            expected: latest_hash,
            got: tx.block_hash,
        });
    }

    // Check 2: inputs must not collide with pending transactions.
    let mut seen = BTreeSet::new();
    for input in &tx.inputs {
        let index = input.txo.index.unwrap();
        if pending_inputs.contains(&index) || !seen.insert(index) {
            return Err(TxError::DoubleSpendInMempool(index));
        }
    }

    // Check 5: inputs must lie at or before the rightmost assigned leaf.
    for input in &tx.inputs {
        let index = input.txo.index.unwrap();
        if latest.rightmost_index.is_none() || index > latest.rightmost_index.unwrap() {
            return Err(TxError::IndexBeyondFrontier(index));
        }
    }

    // Check 4: outputs plus the minimum fee fit inside the inputs.
    let min_fee = config
        .fee_per_input
        .checked_mul(Amount::from(tx.inputs.len() as u64))
        .ok_or(TxError::InsufficientValue)?;
    let required = total_out
        .checked_add(min_fee)
        .ok_or(TxError::InsufficientValue)?;
    if required > total_in {
        return Err(TxError::InsufficientValue);
    }

    // Check 3: every input proof folds its unused leaf hash to our root.
    let mut expanded = tx.clone();
    for input in &mut expanded.inputs {
        let index = input.txo.index.unwrap();
        if input.proof.is_truncated() {
            input.proof =
                expand_proof(&input.proof, latest).map_err(|_| TxError::InvalidProof(index))?;
        }
        let leaf = input
            .txo
            .leaf_hash_unused()
            .map_err(|_| TxError::Malformed("unassigned input index"))?;
        let ok = tree
            .verify_proof(&leaf, index, &input.proof, &latest.root)
            .map_err(|_| TxError::InvalidProof(index))?;
        if !ok {
            return Err(TxError::InvalidProof(index));
        }
    }

    // Signatures from every input owner (and output owners in strict mode).
    let payload = tx.signing_payload();
    let mut required_signers = tx.input_owners();
    if config.strict_sigs {
        for owner in tx.output_owners() {
            if !required_signers.contains(&owner) {
                required_signers.push(owner);
            }
        }
    }
    for owner in required_signers {
        let sig = tx
            .sigs
            .iter()
            .find(|s| s.address() == owner)
            .ok_or(TxError::MissingSignature(owner))?;
        if !sig.verify(&payload, &owner) {
            return Err(TxError::BadSignature(owner));
        }
    }

    Ok(expanded)
}

/// A block plus the short ids of its transactions, in proposer order.
/// The order is normative: output index assignment follows it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CompactBlock {
    pub block: Block,
    pub short_ids: Vec<ShortId>,
}

impl CompactBlock {
    pub fn encode(block: &Block, txs: &[Transaction]) -> CompactBlock {
        CompactBlock {
            block: block.clone(),
            short_ids: txs.iter().map(|t| t.short_id()).collect(),
        }
    }

    /// Broadcast cost: the constant-size block plus 8 bytes per approved
    /// transaction.
    pub fn wire_size(&self) -> usize {
        self.block.serialize().len() + ShortId::LEN * self.short_ids.len()
    }
}

/// Recomputes the outputs a block created, exactly as any observer with
/// the parent block and the ordered transactions can.
pub fn block_outputs(parent: &Block, txs: &[Transaction]) -> Vec<Txo> {
    derive_indexed_outputs(parent, txs)
}
