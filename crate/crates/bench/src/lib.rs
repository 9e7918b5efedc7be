//! Corpus fixtures shared by the benchmarks.

use std::path::PathBuf;

use gasfuzz_core::{parse_hex_code, Contract, ContractInstance, Runner, DEFAULT_GAS_LIMIT};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Runtime code of a corpus contract.
pub fn runtime(name: &str) -> Vec<u8> {
    let text = std::fs::read_to_string(corpus_dir().join(format!("{name}.bin-runtime")))
        .expect("corpus runtime code");
    parse_hex_code(&text).expect("corpus hex")
}

/// Deploys a corpus contract and binds one of its functions.
pub fn deploy(name: &str, function: &str) -> (ContractInstance, Runner) {
    let dir = corpus_dir();
    let contract = Contract::load(
        &dir.join(format!("{name}.bin")),
        &dir.join(format!("{name}.abi")),
    )
    .expect("corpus artifacts");
    let instance = contract
        .instantiate(&[], DEFAULT_GAS_LIMIT)
        .expect("corpus deploys");
    let spec = contract.function(function).expect("corpus function").clone();
    let runner = Runner::new(&instance, spec);
    (instance, runner)
}
