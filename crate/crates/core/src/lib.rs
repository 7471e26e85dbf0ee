//! Protocol library for the Trail light-node blockchain architecture.
//!
//! Trail keeps the validator state constant-size: a block commits to the
//! whole coin set through a single ever-growing Merkle tree (the TXO
//! tree), transactions carry the Merkle proofs of the coins they spend,
//! and a proposer rebuilds the next root from nothing but the parent
//! block and the transactions themselves. Clients are the only parties
//! who track proofs, and they can archive most of that history off
//! device.
//!
//! The crate is organized around the roles in the protocol:
//!
//! * [`types`] / [`hash`] / [`keys`] — domain types, bit-exact wire
//!   encodings, hashing, and signatures.
//! * [`tree`] — the sparse TXO-tree accumulator: proof verification and
//!   maintenance, and the per-block root computation.
//! * [`node`] — the block proposer/validator that holds only the latest
//!   block and a mempool.
//! * [`client`] — the wallet: balance tracking per fork, transaction
//!   creation, proof histories, archiving, and sync.
//! * [`full_node`] — the archival node serving blocks, transactions, and
//!   tree updates.
//! * [`oracle`] — a fully materialized reference tree for cross-checking.
//! * [`messages`] — the wire messages exchanged between participants.

pub mod chain;
pub mod client;
pub mod full_node;
pub mod hash;
pub mod keys;
pub mod messages;
pub mod node;
pub mod oracle;
pub mod tree;
pub mod types;

pub use chain::{ChainConfig, Genesis, TruncationParams};
pub use hash::{sha256, Hash32};
pub use keys::{Address, KeyPair, PublicKey, Signature};
pub use tree::{
    expand_proof, truncate_proof, truncation_height, update_proof, BlockComputation, TreeDelta,
    TreeError, TxoTree,
};
pub use types::{
    Amount, Block, BranchId, CodecError, LeafIndex, MerkleProof, ShortId, Transaction, TxId,
    TxInput, Txo,
};
