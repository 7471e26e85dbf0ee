//! Shared chain fixtures for the integration tests.

use primitive_types::U256;
use trail_core::{
    Address, Amount, ChainConfig, Genesis, Hash32, KeyPair, MerkleProof, Transaction, TxInput, Txo,
};

pub struct Fixture {
    pub config: ChainConfig,
    pub genesis: Genesis,
    pub keys: Vec<KeyPair>,
}

/// A chain whose genesis allocates `alloc` coins to each of `accounts`
/// key pairs (account `i` uses `KeyPair::from_id(i)`).
pub fn chain(height: u8, accounts: u64, alloc: u64, fee_per_input: u64) -> Fixture {
    let keys: Vec<KeyPair> = (0..accounts).map(KeyPair::from_id).collect();
    let mut config = ChainConfig::new(height);
    config.fee_per_input = Amount::from(fee_per_input);
    config.genesis_allocation = keys
        .iter()
        .map(|k| (k.address(), Amount::from(alloc)))
        .collect();
    let genesis = config.build_genesis(&config.tree());
    Fixture {
        config,
        genesis,
        keys,
    }
}

impl Fixture {
    /// The allocation TXO of account `i`, with its genesis proof.
    pub fn genesis_coin(&self, i: usize) -> (Txo, MerkleProof) {
        let txo = self.genesis.outputs[i];
        let proof = self
            .genesis
            .delta
            .proof_for(txo.index.unwrap(), self.config.tree_height)
            .expect("genesis delta covers allocation leaves");
        (txo, proof)
    }
}

/// Builds and signs a transaction spending `inputs` (owned by `signer`)
/// into the given payments plus a change output back to the signer when
/// value is left over after `fee`.
pub fn build_tx(
    signer: &KeyPair,
    tip: Hash32,
    inputs: Vec<(Txo, MerkleProof)>,
    payments: &[(Address, u64)],
    fee: u64,
) -> Transaction {
    let total_in: u64 = inputs.iter().map(|(t, _)| t.balance.as_u64()).sum();
    let paid: u64 = payments.iter().map(|(_, v)| v).sum();
    let change = total_in - paid - fee;
    let mut outputs: Vec<Txo> = payments
        .iter()
        .map(|(to, v)| Txo::new_output(*to, U256::from(*v), tip))
        .collect();
    if change > 0 {
        outputs.push(Txo::new_output(signer.address(), U256::from(change), tip));
    }
    let mut tx = Transaction {
        block_hash: tip,
        inputs: inputs
            .into_iter()
            .map(|(txo, proof)| TxInput { txo, proof })
            .collect(),
        outputs,
        sigs: vec![],
    };
    tx.sign_with(signer);
    tx
}
