//! Account keys, addresses, and transaction signatures.
//!
//! Ed25519 keys; an address is the SHA-256 of the verifying key, so any
//! 32-byte collision-resistant map from public key to address would do.
//! Signatures are deterministic: the same key and payload always produce
//! the same bytes.

use crate::hash::sha256;
use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use std::fmt;

/// 32-byte account identifier derived from a public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 32]);

impl Address {
    pub const LEN: usize = 32;

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Address> {
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(Address(arr))
    }

    /// Deterministic address of a verifying key.
    pub fn of(public: &PublicKey) -> Address {
        Address(sha256(&public.0).0)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({}..)", &hex::encode(self.0)[..12])
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Serialized Ed25519 verifying key.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PublicKey(pub [u8; 32]);

/// A signature record carried in a transaction: the signer's public key
/// plus the Ed25519 signature over the signing payload. The address it
/// answers for is `Address::of(public_key)`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub public_key: PublicKey,
    pub sig: [u8; 64],
}

impl Signature {
    /// Wire size: 32-byte public key + 64-byte signature.
    pub const LEN: usize = 96;

    pub fn address(&self) -> Address {
        Address::of(&self.public_key)
    }

    /// True iff `self` is a valid signature over `payload` by the key
    /// behind `address`.
    pub fn verify(&self, payload: &[u8], address: &Address) -> bool {
        if self.address() != *address {
            return false;
        }
        let Ok(vk) = VerifyingKey::from_bytes(&self.public_key.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&self.sig);
        vk.verify(payload, &sig).is_ok()
    }

    pub fn to_bytes(&self) -> [u8; Self::LEN] {
        let mut out = [0u8; Self::LEN];
        out[..32].copy_from_slice(&self.public_key.0);
        out[32..].copy_from_slice(&self.sig);
        out
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Signature> {
        if bytes.len() != Self::LEN {
            return None;
        }
        Some(Signature {
            public_key: PublicKey(bytes[..32].try_into().unwrap()),
            sig: bytes[32..].try_into().unwrap(),
        })
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature(by {})", self.address())
    }
}

/// Signing/verifying key pair for one account.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    /// Derives a key pair from a 32-byte seed. Deterministic, so simulated
    /// participants can be reproduced from a scenario seed.
    pub fn from_seed(seed: [u8; 32]) -> KeyPair {
        KeyPair {
            signing: SigningKey::from_bytes(&seed),
        }
    }

    /// Convenience for tests and simulations: expands a small integer id
    /// into a seed.
    pub fn from_id(id: u64) -> KeyPair {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&id.to_be_bytes());
        KeyPair::from_seed(sha256(&seed).0)
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn address(&self) -> Address {
        Address::of(&self.public_key())
    }

    /// Signs `payload`; deterministic for a fixed key and payload.
    pub fn sign(&self, payload: &[u8]) -> Signature {
        Signature {
            public_key: self.public_key(),
            sig: self.signing.sign(payload).to_bytes(),
        }
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyPair({})", self.address())
    }
}
