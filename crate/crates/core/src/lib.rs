//! Gas-guided fuzzing of EVM smart contracts.
//!
//! The pipeline: decode runtime bytecode ([`bytecode`]), build a weighted
//! control-flow graph ([`wcfg`]), execute transactions on a gas-metered
//! interpreter ([`evm`]), and search for inputs that maximise gas
//! ([`fuzzer`]) through ABI-encoded calls ([`abi`], [`harness`]).

pub mod abi;
pub mod bytecode;
pub mod error;
pub mod evm;
pub mod fuzzer;
pub mod harness;
mod hash;
pub mod report;
pub mod wcfg;


pub use bytecode::{disassemble, parse_hex_code, Instruction};
pub use fuzzer::{run_campaign, CampaignConfig, CampaignOutcome, Strategy};
pub use harness::{Contract, ContractInstance, HarnessConfig, Runner};
pub use error::{Error, Result};
pub use abi::{parse_abi, AbiType, EnvField, FunctionSpec, Gene, GeneMap};
pub use evm::{
    DEFAULT_GAS_LIMIT,
    execute, Address, ExecutionEnv, ExecutionResult, Feedback, Status, Word, WorldState,
};


pub use hash::keccak256;

pub use report::{compute_diff, CampaignReport, GasDiff};
pub use wcfg::{build_wcfg, Edge, GasEstimate, Wcfg};
