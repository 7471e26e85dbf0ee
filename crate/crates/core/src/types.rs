//! Core protocol types and their wire encodings.
//!
//! Every multi-byte integer is big-endian. The layouts here are the wire
//! and storage format for the whole workspace:
//!
//! * TXO: 4 fixed 32-byte fields, 128 bytes total.
//! * branch id: 1 height byte + 32-byte index, 33 bytes.
//! * block: 4 fixed fields + full rightmost proof, `128 + 32·H` bytes.
//! * transaction: anchor + proof-carrying inputs + outputs + signatures.

use crate::hash::{sha256, Hash32};
use crate::keys::{Address, KeyPair, Signature};
use primitive_types::U256;
use std::fmt;
use thiserror::Error;

/// Leaf position in the TXO tree. 256-bit so the production tree height
/// of 255 is addressable.
pub type LeafIndex = U256;

/// Coin amount. 256-bit unsigned; all arithmetic on amounts is checked.
pub type Amount = U256;

/// A leaf hash was requested for a TXO whose tree position is not fixed yet.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("TXO has no assigned leaf index")]
pub struct UnassignedIndex;

/// Errors from decoding wire bytes.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("invalid field value: {0}")]
    Invalid(&'static str),
}

/// Byte reader used by all decoders.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(CodecError::UnexpectedEnd);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn hash(&mut self) -> Result<Hash32, CodecError> {
        Ok(Hash32::from_slice(self.take(32)?).unwrap())
    }

    pub fn u256(&mut self) -> Result<U256, CodecError> {
        Ok(U256::from_big_endian(self.take(32)?))
    }

    pub fn finish(self) -> Result<(), CodecError> {
        let left = self.buf.len() - self.pos;
        if left == 0 {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes(left))
        }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

// ---------------------------------------------------------------------------
// TXO

/// A transaction output: the unit of coin ownership.
///
/// `index` is the leaf position in the TXO tree; it is `None` on freshly
/// created outputs (the position is only fixed when a block appends them)
/// and assigned everywhere else.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Txo {
    pub index: Option<LeafIndex>,
    /// Hash of the parent of the block that appended this TXO.
    pub parent_block: Hash32,
    pub owner: Address,
    pub balance: Amount,
}

impl Txo {
    /// Serialized size: four 32-byte fields.
    pub const LEN: usize = 128;

    /// Fresh output with no tree position yet.
    pub fn new_output(owner: Address, balance: Amount, parent_block: Hash32) -> Txo {
        Txo {
            index: None,
            parent_block,
            owner,
            balance,
        }
    }

    /// Copy of `self` with the leaf position filled in.
    pub fn with_index(&self, index: LeafIndex) -> Txo {
        Txo {
            index: Some(index),
            ..*self
        }
    }

    /// 128-byte encoding in field order index, parent block, owner,
    /// balance. An unassigned index encodes as zero; whether zero means
    /// "leaf 0" or "unassigned" is fixed by context.
    pub fn serialize(&self) -> [u8; Txo::LEN] {
        let mut out = [0u8; Txo::LEN];
        out[..32].copy_from_slice(&self.index.unwrap_or_default().to_big_endian());
        out[32..64].copy_from_slice(self.parent_block.as_bytes());
        out[64..96].copy_from_slice(self.owner.as_bytes());
        out[96..128].copy_from_slice(&self.balance.to_big_endian());
        out
    }

    /// Leaf value while this TXO is unused: the hash of its encoding.
    pub fn leaf_hash_unused(&self) -> Result<Hash32, UnassignedIndex> {
        if self.index.is_none() {
            return Err(UnassignedIndex);
        }
        Ok(sha256(&self.serialize()))
    }

    /// Leaf value once this TXO is spent: the hash of its encoding
    /// concatenated with itself (a 256-byte preimage).
    pub fn leaf_hash_used(&self) -> Result<Hash32, UnassignedIndex> {
        if self.index.is_none() {
            return Err(UnassignedIndex);
        }
        let bytes = self.serialize();
        let mut doubled = Vec::with_capacity(Txo::LEN * 2);
        doubled.extend_from_slice(&bytes);
        doubled.extend_from_slice(&bytes);
        Ok(sha256(&doubled))
    }

    /// Decodes 128 bytes as a TXO with an assigned index.
    pub fn deserialize_assigned(bytes: &[u8]) -> Result<Txo, CodecError> {
        let mut r = Reader::new(bytes);
        let txo = Self::read_assigned(&mut r)?;
        r.finish()?;
        Ok(txo)
    }

    pub(crate) fn read_assigned(r: &mut Reader<'_>) -> Result<Txo, CodecError> {
        Ok(Txo {
            index: Some(r.u256()?),
            parent_block: r.hash()?,
            owner: Address::from_slice(r.take(32)?).unwrap(),
            balance: r.u256()?,
        })
    }

    pub(crate) fn read_unassigned(r: &mut Reader<'_>) -> Result<Txo, CodecError> {
        let index = r.u256()?;
        if !index.is_zero() {
            return Err(CodecError::Invalid("output carries an assigned index"));
        }
        Ok(Txo {
            index: None,
            parent_block: r.hash()?,
            owner: Address::from_slice(r.take(32)?).unwrap(),
            balance: r.u256()?,
        })
    }
}

// ---------------------------------------------------------------------------
// Branch ids

/// Address of one node in the TXO tree: height (0 = leaves) plus the
/// offset from the left within that height. Serializes to 33 bytes.
///
/// Ordering is by `(height, index)`, which is also the canonical order of
/// tree-delta serialization.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BranchId {
    pub height: u8,
    pub index: U256,
}

impl BranchId {
    pub const LEN: usize = 33;

    pub fn new(height: u8, index: U256) -> BranchId {
        BranchId { height, index }
    }

    /// Node at `height` on the path from leaf `leaf` to the root.
    pub fn on_path(leaf: LeafIndex, height: u8) -> BranchId {
        BranchId {
            height,
            index: leaf >> height,
        }
    }

    /// Sibling of the path node at `height` for leaf `leaf`. These are the
    /// positions a Merkle proof for `leaf` consists of.
    pub fn path_sibling(leaf: LeafIndex, height: u8) -> BranchId {
        BranchId {
            height,
            index: (leaf >> height) ^ U256::one(),
        }
    }

    pub fn sibling(&self) -> BranchId {
        BranchId {
            height: self.height,
            index: self.index ^ U256::one(),
        }
    }

    pub fn parent(&self) -> BranchId {
        BranchId {
            height: self.height + 1,
            index: self.index >> 1,
        }
    }

    pub fn serialize(&self) -> [u8; BranchId::LEN] {
        let mut out = [0u8; BranchId::LEN];
        out[0] = self.height;
        out[1..].copy_from_slice(&self.index.to_big_endian());
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<BranchId, CodecError> {
        if bytes.len() != Self::LEN {
            return Err(CodecError::BadLength {
                expected: Self::LEN,
                got: bytes.len(),
            });
        }
        Ok(BranchId {
            height: bytes[0],
            index: U256::from_big_endian(&bytes[1..]),
        })
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<BranchId, CodecError> {
        let height = r.u8()?;
        let index = r.u256()?;
        Ok(BranchId { height, index })
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.height, self.index)
    }
}

// ---------------------------------------------------------------------------
// Merkle proofs

/// Sibling hashes along a leaf-to-root path. Entry `h` is the sibling at
/// height `h`. A full proof has one entry per level below the root; a
/// truncated proof drops every entry at or above the truncation height
/// and records the omission in a flag.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MerkleProof {
    siblings: Vec<Hash32>,
    truncated: bool,
}

impl MerkleProof {
    pub fn full(siblings: Vec<Hash32>) -> MerkleProof {
        MerkleProof {
            siblings,
            truncated: false,
        }
    }

    pub fn truncated(siblings: Vec<Hash32>) -> MerkleProof {
        MerkleProof {
            siblings,
            truncated: true,
        }
    }

    pub fn len(&self) -> usize {
        self.siblings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.siblings.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Height above which entries were dropped, if any.
    pub fn truncation_height(&self) -> Option<u8> {
        self.truncated.then_some(self.siblings.len() as u8)
    }

    pub fn sibling(&self, height: usize) -> Option<&Hash32> {
        self.siblings.get(height)
    }

    pub fn sibling_mut(&mut self, height: usize) -> Option<&mut Hash32> {
        self.siblings.get_mut(height)
    }

    pub fn siblings(&self) -> &[Hash32] {
        &self.siblings
    }

    /// Serialized bytes of the sibling hashes alone, without framing.
    pub fn sibling_bytes(&self) -> usize {
        self.siblings.len() * 32
    }

    pub(crate) fn write(&self, out: &mut Vec<u8>) {
        out.push(self.truncated as u8);
        out.extend_from_slice(&(self.siblings.len() as u16).to_be_bytes());
        for s in &self.siblings {
            out.extend_from_slice(s.as_bytes());
        }
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<MerkleProof, CodecError> {
        let flag = r.u8()?;
        if flag > 1 {
            return Err(CodecError::Invalid("proof truncation flag"));
        }
        let len = r.u16()? as usize;
        let mut siblings = Vec::with_capacity(len);
        for _ in 0..len {
            siblings.push(r.hash()?);
        }
        Ok(MerkleProof {
            siblings,
            truncated: flag == 1,
        })
    }
}

// ---------------------------------------------------------------------------
// Blocks

/// Sentinel encoding of "no leaf assigned yet" in the rightmost-index
/// field: all ones, which is never a valid leaf index for tree heights
/// up to 255.
const EMPTY_INDEX_SENTINEL: [u8; 32] = [0xff; 32];

/// A block commitment. Constant size for a fixed tree height: four
/// 32-byte fields plus the full rightmost proof, `128 + 32·H` bytes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Block {
    pub parent: Hash32,
    /// Root of the TXO tree as of this block.
    pub root: Hash32,
    /// Highest leaf index holding a TXO, or `None` while the tree is empty.
    pub rightmost_index: Option<LeafIndex>,
    /// Value of the leaf at `rightmost_index`.
    pub rightmost_hash: Hash32,
    /// Full (never truncated) proof of the rightmost leaf.
    pub rightmost_proof: MerkleProof,
}

impl Block {
    /// Serialized size at tree height `h`.
    pub const fn serialized_len(h: u8) -> usize {
        128 + 32 * h as usize
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(128 + self.rightmost_proof.sibling_bytes());
        out.extend_from_slice(self.parent.as_bytes());
        out.extend_from_slice(self.root.as_bytes());
        match self.rightmost_index {
            Some(i) => out.extend_from_slice(&i.to_big_endian()),
            None => out.extend_from_slice(&EMPTY_INDEX_SENTINEL),
        }
        out.extend_from_slice(self.rightmost_hash.as_bytes());
        for s in self.rightmost_proof.siblings() {
            out.extend_from_slice(s.as_bytes());
        }
        out
    }

    pub fn deserialize(bytes: &[u8], h: u8) -> Result<Block, CodecError> {
        let expected = Self::serialized_len(h);
        if bytes.len() != expected {
            return Err(CodecError::BadLength {
                expected,
                got: bytes.len(),
            });
        }
        let mut r = Reader::new(bytes);
        let parent = r.hash()?;
        let root = r.hash()?;
        let raw_index: [u8; 32] = r.take(32)?.try_into().unwrap();
        let rightmost_index = if raw_index == EMPTY_INDEX_SENTINEL {
            None
        } else {
            Some(U256::from_big_endian(&raw_index))
        };
        let rightmost_hash = r.hash()?;
        let mut siblings = Vec::with_capacity(h as usize);
        for _ in 0..h {
            siblings.push(r.hash()?);
        }
        r.finish()?;
        Ok(Block {
            parent,
            root,
            rightmost_index,
            rightmost_hash,
            rightmost_proof: MerkleProof::full(siblings),
        })
    }

    /// Block identifier: hash of the serialized block.
    pub fn hash(&self) -> Hash32 {
        sha256(&self.serialize())
    }
}

// ---------------------------------------------------------------------------
// Transactions

/// One spent TXO together with the Merkle proof that it is unused under
/// the anchor block's root.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TxInput {
    pub txo: Txo,
    pub proof: MerkleProof,
}

/// Transaction identifier: hash over the full serialized transaction,
/// proofs and signatures included. Nodes that refresh a pending
/// transaction's proofs therefore see its txid change in lockstep.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TxId(pub Hash32);

/// First 8 bytes of a txid, used in compact block relay.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShortId(pub [u8; 8]);

impl ShortId {
    pub const LEN: usize = 8;

    pub fn of(txid: &TxId) -> ShortId {
        ShortId(txid.0.prefix8())
    }

    /// True iff this short id is a prefix of `txid`.
    pub fn matches(&self, txid: &TxId) -> bool {
        txid.0.as_bytes()[..8] == self.0
    }
}

impl fmt::Debug for ShortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShortId({})", hex::encode(self.0))
    }
}

impl fmt::Display for ShortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// A proof-carrying transaction.
///
/// `block_hash` anchors the input proofs to a specific block; nodes may
/// rewrite it (and the proofs) while the transaction is pending, which is
/// why neither is covered by the signatures.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transaction {
    pub block_hash: Hash32,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<Txo>,
    pub sigs: Vec<Signature>,
}

impl Transaction {
    /// Canonical envelope encoding. Field counts use 4-byte prefixes;
    /// proofs carry a truncation flag and a 2-byte length.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.body_size() + 32 * self.sigs.len());
        out.extend_from_slice(self.block_hash.as_bytes());
        out.extend_from_slice(&(self.inputs.len() as u32).to_be_bytes());
        for input in &self.inputs {
            out.extend_from_slice(&input.txo.serialize());
            input.proof.write(&mut out);
        }
        out.extend_from_slice(&(self.outputs.len() as u32).to_be_bytes());
        for output in &self.outputs {
            out.extend_from_slice(&output.serialize());
        }
        out.extend_from_slice(&(self.sigs.len() as u32).to_be_bytes());
        for sig in &self.sigs {
            out.extend_from_slice(&sig.to_bytes());
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Transaction, CodecError> {
        let mut r = Reader::new(bytes);
        let tx = Self::read(&mut r)?;
        r.finish()?;
        Ok(tx)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Transaction, CodecError> {
        let block_hash = r.hash()?;
        let n_in = r.u32()? as usize;
        let mut inputs = Vec::with_capacity(n_in.min(1024));
        for _ in 0..n_in {
            let txo = Txo::read_assigned(r)?;
            let proof = MerkleProof::read(r)?;
            inputs.push(TxInput { txo, proof });
        }
        let n_out = r.u32()? as usize;
        let mut outputs = Vec::with_capacity(n_out.min(1024));
        for _ in 0..n_out {
            outputs.push(Txo::read_unassigned(r)?);
        }
        let n_sig = r.u32()? as usize;
        let mut sigs = Vec::with_capacity(n_sig.min(1024));
        for _ in 0..n_sig {
            sigs.push(Signature::from_slice(r.take(Signature::LEN)?).unwrap());
        }
        Ok(Transaction {
            block_hash,
            inputs,
            outputs,
            sigs,
        })
    }

    /// Size of the proof-carrying body: the 32-byte anchor, each input's
    /// 128-byte TXO plus its proof hashes, and each 128-byte output.
    /// This is the portion that scales with input and output counts;
    /// envelope framing and signatures are excluded.
    pub fn body_size(&self) -> usize {
        32 + self
            .inputs
            .iter()
            .map(|i| Txo::LEN + i.proof.sibling_bytes())
            .sum::<usize>()
            + Txo::LEN * self.outputs.len()
    }

    /// Hash of the full envelope.
    pub fn txid(&self) -> TxId {
        TxId(sha256(&self.serialize()))
    }

    pub fn short_id(&self) -> ShortId {
        ShortId::of(&self.txid())
    }

    /// Identity that survives proof refreshes and anchor rewrites: the
    /// hash of the signing payload. Used for bookkeeping, never on the
    /// wire.
    pub fn stable_id(&self) -> Hash32 {
        sha256(&self.signing_payload())
    }

    /// The bytes covered by signatures: input TXOs (without proofs) and
    /// output TXOs with the index field forced to zero. Excludes the
    /// anchor and the proofs, both of which a node may rewrite while the
    /// transaction is pending.
    pub fn signing_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + Txo::LEN * (self.inputs.len() + self.outputs.len()));
        out.extend_from_slice(&(self.inputs.len() as u32).to_be_bytes());
        for input in &self.inputs {
            out.extend_from_slice(&input.txo.serialize());
        }
        out.extend_from_slice(&(self.outputs.len() as u32).to_be_bytes());
        for output in &self.outputs {
            let unindexed = Txo {
                index: None,
                ..*output
            };
            out.extend_from_slice(&unindexed.serialize());
        }
        out
    }

    /// Appends `keypair`'s signature over the signing payload.
    pub fn sign_with(&mut self, keypair: &KeyPair) {
        let payload = self.signing_payload();
        self.sigs.push(keypair.sign(&payload));
    }

    /// Distinct owner addresses over the inputs, in first-appearance order.
    pub fn input_owners(&self) -> Vec<Address> {
        let mut owners = Vec::new();
        for input in &self.inputs {
            if !owners.contains(&input.txo.owner) {
                owners.push(input.txo.owner);
            }
        }
        owners
    }

    /// Distinct owner addresses over the outputs, in first-appearance order.
    pub fn output_owners(&self) -> Vec<Address> {
        let mut owners = Vec::new();
        for output in &self.outputs {
            if !owners.contains(&output.owner) {
                owners.push(output.owner);
            }
        }
        owners
    }

    /// Checked sum of input balances.
    pub fn total_input(&self) -> Option<Amount> {
        self.inputs
            .iter()
            .try_fold(Amount::zero(), |acc, i| acc.checked_add(i.txo.balance))
    }

    /// Checked sum of output balances.
    pub fn total_output(&self) -> Option<Amount> {
        self.outputs
            .iter()
            .try_fold(Amount::zero(), |acc, o| acc.checked_add(o.balance))
    }
}
