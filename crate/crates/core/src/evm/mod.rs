//! Gas-metered EVM interpreter.
//!
//! One transaction against a single contract. External calls are priced but do
//! not run any code: the callee is a [`CallStub`].

pub mod gas;
mod interpreter;
mod state;
mod trace;
pub mod word;

use std::collections::BTreeMap;
use std::fmt;

use primitive_types::U256;
use serde::{Deserialize, Serialize};

use crate::wcfg::{BlockId, Edge, Wcfg};

pub use gas::{call_cost, intrinsic_gas, memory_expansion_cost, sstore_cost, DEFAULT_GAS_LIMIT};
pub use state::{Account, Address, WorldState};
pub use trace::{JsonTracer, NoopTracer, RecordedStep, StepTrace, Tracer, VecTracer};
pub use word::Word;

pub const STACK_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Success,
    Revert,
    OutOfGas,
    InvalidOp,
    StackError,
    BadJump,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Success => "SUCCESS",
            Status::Revert => "REVERT",
            Status::OutOfGas => "OUT_OF_GAS",
            Status::InvalidOp => "INVALID_OP",
            Status::StackError => "STACK_ERROR",
            Status::BadJump => "BAD_JUMP",
        }
    }

    pub fn is_success(self) -> bool {
        self == Status::Success
    }

    /// Exceptional halts consume all remaining gas; REVERT and SUCCESS do not.
    pub fn is_exceptional(self) -> bool {
        !matches!(self, Status::Success | Status::Revert)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the stand-in for an external callee behaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallStub {
    pub succeed: bool,
    pub return_data: Vec<u8>,
}

impl Default for CallStub {
    fn default() -> Self {
        CallStub {
            succeed: true,
            return_data: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionEnv {
    /// Account whose code runs.
    pub address: Address,
    pub coinbase: Address,
    pub difficulty: U256,
    pub block_number: u64,
    pub timestamp: u64,
    pub sender: Address,
    pub origin: Address,
    pub call_value: U256,
    /// Transaction gas limit, also reported by GASLIMIT.
    pub gas_limit: u64,
    pub gas_price: U256,
    pub call_stub: CallStub,
}

impl Default for ExecutionEnv {
    fn default() -> Self {
        ExecutionEnv {
            address: Address::from_low_u8(0xc0),
            coinbase: Address::ZERO,
            difficulty: U256::zero(),
            block_number: 0,
            timestamp: 0,
            sender: Address::from_low_u8(0xca),
            origin: Address::from_low_u8(0xca),
            call_value: U256::zero(),
            gas_limit: DEFAULT_GAS_LIMIT,
            gas_price: U256::zero(),
            call_stub: CallStub::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStat {
    pub gas: u64,
    pub hits: u64,
}

/// Gas observed along one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feedback {
    pub status: Status,
    /// Gas charged by the transaction after the refund.
    pub total_gas: u64,
    pub intrinsic_gas: u64,
    pub refund: u64,
    /// Block that was executing when the transaction halted.
    pub terminal_block: Option<BlockId>,
    /// Gas charged inside the terminal block since control last entered it.
    pub terminal_gas: u64,
    pub edges: BTreeMap<Edge, EdgeStat>,
}

impl Feedback {
    pub fn edge_gas(&self, edge: Edge) -> u64 {
        self.edges.get(&edge).map_or(0, |s| s.gas)
    }

    pub fn edge_hits(&self, edge: Edge) -> u64 {
        self.edges.get(&edge).map_or(0, |s| s.hits)
    }

    /// Number of block transitions taken.
    pub fn path_length(&self) -> u64 {
        self.edges.values().map(|s| s.hits).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub status: Status,
    pub gas_used: u64,
    pub gas_used_raw: u64,
    /// Refund actually credited (zero unless the transaction succeeded).
    pub refund: u64,
    pub return_data: Vec<u8>,
    pub feedback: Feedback,
}

/// Runs a message call of `calldata` against `code`.
///
/// `world` is updated in place on success and left untouched otherwise.
pub fn execute(
    code: &[u8],
    calldata: &[u8],
    env: &ExecutionEnv,
    world: &mut WorldState,
    wcfg: &Wcfg,
) -> ExecutionResult {
    interpreter::run(code, calldata, false, env, world, wcfg, &mut NoopTracer)
}

pub fn execute_traced<T: Tracer>(
    code: &[u8],
    calldata: &[u8],
    env: &ExecutionEnv,
    world: &mut WorldState,
    wcfg: &Wcfg,
    tracer: &mut T,
) -> ExecutionResult {
    interpreter::run(code, calldata, false, env, world, wcfg, tracer)
}

/// Runs init code as a contract-creating transaction. On success the returned
/// data is installed as the code of `env.address` after paying the deposit.
pub fn execute_create(init_code: &[u8], env: &ExecutionEnv, world: &mut WorldState) -> ExecutionResult {
    let wcfg = Wcfg::from_code(init_code);
    interpreter::run(init_code, &[], true, env, world, &wcfg, &mut NoopTracer)
}
