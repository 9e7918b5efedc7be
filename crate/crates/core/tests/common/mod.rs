#![allow(dead_code)]

pub mod abi_oracle;
pub mod gas_oracle;
pub mod wcfg_oracle;

use std::path::PathBuf;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

use gasfuzz_core::{Contract, ContractInstance, Runner, DEFAULT_GAS_LIMIT};

/// Deploys a corpus contract from its init code and binds `function`.
pub fn deploy(name: &str, function: &str) -> (Contract, ContractInstance, Runner) {
    let dir = corpus_dir();
    let contract = Contract::load(
        &dir.join(format!("{name}.bin")),
        &dir.join(format!("{name}.abi")),
    )
    .unwrap();
    let instance = contract.instantiate(&[], DEFAULT_GAS_LIMIT).unwrap();
    let spec = contract.function(function).unwrap().clone();
    let runner = Runner::new(&instance, spec);
    (contract, instance, runner)
}
