//! Instruction decoding and the static (operand-independent) gas schedule.
//!
//! The fee table is frozen to the Constantinople/Petersburg schedule: the last
//! fork before Istanbul repriced SLOAD, BALANCE and calldata bytes. Opcodes that
//! did not exist yet (CHAINID, SELFBALANCE, PUSH0, ...) decode as invalid.

use std::fmt;

use primitive_types::U256;

use crate::error::Result;

pub mod op {
    pub const STOP: u8 = 0x00;
    pub const ADD: u8 = 0x01;
    pub const MUL: u8 = 0x02;
    pub const SUB: u8 = 0x03;
    pub const DIV: u8 = 0x04;
    pub const SDIV: u8 = 0x05;
    pub const MOD: u8 = 0x06;
    pub const SMOD: u8 = 0x07;
    pub const ADDMOD: u8 = 0x08;
    pub const MULMOD: u8 = 0x09;
    pub const EXP: u8 = 0x0a;
    pub const SIGNEXTEND: u8 = 0x0b;
    pub const LT: u8 = 0x10;
    pub const GT: u8 = 0x11;
    pub const SLT: u8 = 0x12;
    pub const SGT: u8 = 0x13;
    pub const EQ: u8 = 0x14;
    pub const ISZERO: u8 = 0x15;
    pub const AND: u8 = 0x16;
    pub const OR: u8 = 0x17;
    pub const XOR: u8 = 0x18;
    pub const NOT: u8 = 0x19;
    pub const BYTE: u8 = 0x1a;
    pub const SHL: u8 = 0x1b;
    pub const SHR: u8 = 0x1c;
    pub const SAR: u8 = 0x1d;
    pub const SHA3: u8 = 0x20;
    pub const ADDRESS: u8 = 0x30;
    pub const BALANCE: u8 = 0x31;
    pub const ORIGIN: u8 = 0x32;
    pub const CALLER: u8 = 0x33;
    pub const CALLVALUE: u8 = 0x34;
    pub const CALLDATALOAD: u8 = 0x35;
    pub const CALLDATASIZE: u8 = 0x36;
    pub const CALLDATACOPY: u8 = 0x37;
    pub const CODESIZE: u8 = 0x38;
    pub const CODECOPY: u8 = 0x39;
    pub const GASPRICE: u8 = 0x3a;
    pub const EXTCODESIZE: u8 = 0x3b;
    pub const EXTCODECOPY: u8 = 0x3c;
    pub const RETURNDATASIZE: u8 = 0x3d;
    pub const RETURNDATACOPY: u8 = 0x3e;
    pub const EXTCODEHASH: u8 = 0x3f;
    pub const BLOCKHASH: u8 = 0x40;
    pub const COINBASE: u8 = 0x41;
    pub const TIMESTAMP: u8 = 0x42;
    pub const NUMBER: u8 = 0x43;
    pub const DIFFICULTY: u8 = 0x44;
    pub const GASLIMIT: u8 = 0x45;
    pub const POP: u8 = 0x50;
    pub const MLOAD: u8 = 0x51;
    pub const MSTORE: u8 = 0x52;
    pub const MSTORE8: u8 = 0x53;
    pub const SLOAD: u8 = 0x54;
    pub const SSTORE: u8 = 0x55;
    pub const JUMP: u8 = 0x56;
    pub const JUMPI: u8 = 0x57;
    pub const PC: u8 = 0x58;
    pub const MSIZE: u8 = 0x59;
    pub const GAS: u8 = 0x5a;
    pub const JUMPDEST: u8 = 0x5b;
    pub const PUSH1: u8 = 0x60;
    pub const PUSH2: u8 = 0x61;
    pub const PUSH4: u8 = 0x63;
    pub const PUSH20: u8 = 0x73;
    pub const PUSH32: u8 = 0x7f;
    pub const DUP1: u8 = 0x80;
    pub const DUP16: u8 = 0x8f;
    pub const SWAP1: u8 = 0x90;
    pub const SWAP16: u8 = 0x9f;
    pub const LOG0: u8 = 0xa0;
    pub const LOG4: u8 = 0xa4;
    pub const CREATE: u8 = 0xf0;
    pub const CALL: u8 = 0xf1;
    pub const CALLCODE: u8 = 0xf2;
    pub const RETURN: u8 = 0xf3;
    pub const DELEGATECALL: u8 = 0xf4;
    pub const CREATE2: u8 = 0xf5;
    pub const STATICCALL: u8 = 0xfa;
    pub const REVERT: u8 = 0xfd;
    pub const INVALID: u8 = 0xfe;
    pub const SELFDESTRUCT: u8 = 0xff;
}

/// How an opcode ends (or does not end) a basic block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    /// Control continues at the next instruction.
    Next,
    /// JUMP: control continues only at the popped destination.
    Jump,
    /// JUMPI: destination or the next instruction.
    Branch,
    /// STOP, RETURN, REVERT, SELFDESTRUCT.
    Halt,
    /// Undefined opcodes and the decoded-but-unsupported family
    /// (CREATE, CREATE2, CALLCODE, DELEGATECALL, STATICCALL).
    Invalid,
}

impl Flow {
    pub fn ends_block(self) -> bool {
        self != Flow::Next
    }

    pub fn falls_through(self) -> bool {
        matches!(self, Flow::Next | Flow::Branch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpInfo {
    pub name: &'static str,
    /// Static component of the fee, in gas.
    pub base_cost: u64,
    /// Part of the fee depends on operands or state.
    pub dynamic: bool,
    pub pops: u8,
    pub pushes: u8,
    pub flow: Flow,
    pub defined: bool,
}

const UNDEFINED: OpInfo = OpInfo {
    name: "INVALID",
    base_cost: 0,
    dynamic: false,
    pops: 0,
    pushes: 0,
    flow: Flow::Invalid,
    defined: false,
};

const fn def(name: &'static str, base_cost: u64, pops: u8, pushes: u8) -> OpInfo {
    OpInfo {
        name,
        base_cost,
        dynamic: false,
        pops,
        pushes,
        flow: Flow::Next,
        defined: true,
    }
}

const fn dynamic(mut info: OpInfo) -> OpInfo {
    info.dynamic = true;
    info
}

const fn flow(mut info: OpInfo, flow: Flow) -> OpInfo {
    info.flow = flow;
    info
}

const PUSH_NAMES: [&str; 32] = [
    "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9", "PUSH10",
    "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18", "PUSH19",
    "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27", "PUSH28",
    "PUSH29", "PUSH30", "PUSH31", "PUSH32",
];
const DUP_NAMES: [&str; 16] = [
    "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11",
    "DUP12", "DUP13", "DUP14", "DUP15", "DUP16",
];
const SWAP_NAMES: [&str; 16] = [
    "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10",
    "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16",
];
const LOG_NAMES: [&str; 5] = ["LOG0", "LOG1", "LOG2", "LOG3", "LOG4"];

const fn build_table() -> [OpInfo; 256] {
    use op::*;
    let mut t = [UNDEFINED; 256];
    t[STOP as usize] = flow(def("STOP", 0, 0, 0), Flow::Halt);
    t[ADD as usize] = def("ADD", 3, 2, 1);
    t[MUL as usize] = def("MUL", 5, 2, 1);
    t[SUB as usize] = def("SUB", 3, 2, 1);
    t[DIV as usize] = def("DIV", 5, 2, 1);
    t[SDIV as usize] = def("SDIV", 5, 2, 1);
    t[MOD as usize] = def("MOD", 5, 2, 1);
    t[SMOD as usize] = def("SMOD", 5, 2, 1);
    t[ADDMOD as usize] = def("ADDMOD", 8, 3, 1);
    t[MULMOD as usize] = def("MULMOD", 8, 3, 1);
    t[EXP as usize] = dynamic(def("EXP", 10, 2, 1));
    t[SIGNEXTEND as usize] = def("SIGNEXTEND", 5, 2, 1);
    t[LT as usize] = def("LT", 3, 2, 1);
    t[GT as usize] = def("GT", 3, 2, 1);
    t[SLT as usize] = def("SLT", 3, 2, 1);
    t[SGT as usize] = def("SGT", 3, 2, 1);
    t[EQ as usize] = def("EQ", 3, 2, 1);
    t[ISZERO as usize] = def("ISZERO", 3, 1, 1);
    t[AND as usize] = def("AND", 3, 2, 1);
    t[OR as usize] = def("OR", 3, 2, 1);
    t[XOR as usize] = def("XOR", 3, 2, 1);
    t[NOT as usize] = def("NOT", 3, 1, 1);
    t[BYTE as usize] = def("BYTE", 3, 2, 1);
    t[SHL as usize] = def("SHL", 3, 2, 1);
    t[SHR as usize] = def("SHR", 3, 2, 1);
    t[SAR as usize] = def("SAR", 3, 2, 1);
    t[SHA3 as usize] = dynamic(def("SHA3", 30, 2, 1));
    t[ADDRESS as usize] = def("ADDRESS", 2, 0, 1);
    t[BALANCE as usize] = def("BALANCE", 400, 1, 1);
    t[ORIGIN as usize] = def("ORIGIN", 2, 0, 1);
    t[CALLER as usize] = def("CALLER", 2, 0, 1);
    t[CALLVALUE as usize] = def("CALLVALUE", 2, 0, 1);
    t[CALLDATALOAD as usize] = def("CALLDATALOAD", 3, 1, 1);
    t[CALLDATASIZE as usize] = def("CALLDATASIZE", 2, 0, 1);
    t[CALLDATACOPY as usize] = dynamic(def("CALLDATACOPY", 3, 3, 0));
    t[CODESIZE as usize] = def("CODESIZE", 2, 0, 1);
    t[CODECOPY as usize] = dynamic(def("CODECOPY", 3, 3, 0));
    t[GASPRICE as usize] = def("GASPRICE", 2, 0, 1);
    t[EXTCODESIZE as usize] = def("EXTCODESIZE", 700, 1, 1);
    t[EXTCODECOPY as usize] = dynamic(def("EXTCODECOPY", 700, 4, 0));
    t[RETURNDATASIZE as usize] = def("RETURNDATASIZE", 2, 0, 1);
    t[RETURNDATACOPY as usize] = dynamic(def("RETURNDATACOPY", 3, 3, 0));
    t[EXTCODEHASH as usize] = def("EXTCODEHASH", 400, 1, 1);
    t[BLOCKHASH as usize] = def("BLOCKHASH", 20, 1, 1);
    t[COINBASE as usize] = def("COINBASE", 2, 0, 1);
    t[TIMESTAMP as usize] = def("TIMESTAMP", 2, 0, 1);
    t[NUMBER as usize] = def("NUMBER", 2, 0, 1);
    t[DIFFICULTY as usize] = def("DIFFICULTY", 2, 0, 1);
    t[GASLIMIT as usize] = def("GASLIMIT", 2, 0, 1);
    t[POP as usize] = def("POP", 2, 1, 0);
    t[MLOAD as usize] = dynamic(def("MLOAD", 3, 1, 1));
    t[MSTORE as usize] = dynamic(def("MSTORE", 3, 2, 0));
    t[MSTORE8 as usize] = dynamic(def("MSTORE8", 3, 2, 0));
    t[SLOAD as usize] = def("SLOAD", 200, 1, 1);
    t[SSTORE as usize] = dynamic(def("SSTORE", 0, 2, 0));
    t[JUMP as usize] = flow(def("JUMP", 8, 1, 0), Flow::Jump);
    t[JUMPI as usize] = flow(def("JUMPI", 10, 2, 0), Flow::Branch);
    t[PC as usize] = def("PC", 2, 0, 1);
    t[MSIZE as usize] = def("MSIZE", 2, 0, 1);
    t[GAS as usize] = def("GAS", 2, 0, 1);
    t[JUMPDEST as usize] = def("JUMPDEST", 1, 0, 0);

    let mut i = 0;
    while i < 32 {
        t[PUSH1 as usize + i] = def(PUSH_NAMES[i], 3, 0, 1);
        i += 1;
    }
    i = 0;
    while i < 16 {
        t[DUP1 as usize + i] = def(DUP_NAMES[i], 3, i as u8 + 1, i as u8 + 2);
        t[SWAP1 as usize + i] = def(SWAP_NAMES[i], 3, i as u8 + 2, i as u8 + 2);
        i += 1;
    }
    i = 0;
    while i < 5 {
        let topics = i as u64;
        t[LOG0 as usize + i] = dynamic(def(LOG_NAMES[i], 375 + 375 * topics, i as u8 + 2, 0));
        i += 1;
    }

    t[CREATE as usize] = flow(def("CREATE", 32000, 3, 1), Flow::Invalid);
    t[CALL as usize] = dynamic(def("CALL", 700, 7, 1));
    t[CALLCODE as usize] = flow(def("CALLCODE", 700, 7, 1), Flow::Invalid);
    t[RETURN as usize] = dynamic(flow(def("RETURN", 0, 2, 0), Flow::Halt));
    t[DELEGATECALL as usize] = flow(def("DELEGATECALL", 700, 6, 1), Flow::Invalid);
    t[CREATE2 as usize] = flow(def("CREATE2", 32000, 4, 1), Flow::Invalid);
    t[STATICCALL as usize] = flow(def("STATICCALL", 700, 6, 1), Flow::Invalid);
    t[REVERT as usize] = dynamic(flow(def("REVERT", 0, 2, 0), Flow::Halt));
    t[INVALID as usize] = flow(def("INVALID", 0, 0, 0), Flow::Invalid);
    t[SELFDESTRUCT as usize] = dynamic(flow(def("SELFDESTRUCT", 5000, 1, 0), Flow::Halt));
    t
}

static OPCODES: [OpInfo; 256] = build_table();

#[inline]
pub fn info(opcode: u8) -> &'static OpInfo {
    &OPCODES[opcode as usize]
}

/// Width of the immediate operand of a PUSH opcode, zero for everything else.
#[inline]
pub fn push_width(opcode: u8) -> usize {
    if (op::PUSH1..=op::PUSH32).contains(&opcode) {
        (opcode - op::PUSH1 + 1) as usize
    } else {
        0
    }
}

/// Static gas of an opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticGas {
    Fixed(u64),
    /// Executing the opcode consumes everything that is left.
    AllRemaining,
}

impl StaticGas {
    /// Contribution to a block weight: the sentinel counts as nothing, which keeps
    /// block weights lower bounds on what is really charged.
    pub fn weight(self) -> u64 {
        match self {
            StaticGas::Fixed(g) => g,
            StaticGas::AllRemaining => 0,
        }
    }
}

pub fn static_gas(opcode: u8) -> StaticGas {
    let info = info(opcode);
    if !info.defined || opcode == op::INVALID {
        StaticGas::AllRemaining
    } else {
        StaticGas::Fixed(info.base_cost)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub offset: usize,
    pub opcode: u8,
    /// PUSH payload, always exactly the PUSH width long.
    pub immediate: Option<Vec<u8>>,
    /// The code ended inside the PUSH payload; the missing bytes were zero-filled.
    pub truncated: bool,
}

impl Instruction {
    pub fn info(&self) -> &'static OpInfo {
        info(self.opcode)
    }

    pub fn name(&self) -> &'static str {
        self.info().name
    }

    /// Bytes this instruction occupies, immediate included.
    pub fn size(&self) -> usize {
        1 + self.immediate.as_ref().map_or(0, Vec::len)
    }

    pub fn next_offset(&self) -> usize {
        self.offset + self.size()
    }

    pub fn push_value(&self) -> Option<U256> {
        self.immediate.as_deref().map(U256::from_big_endian)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04x}: {}", self.offset, self.name())?;
        if !self.info().defined {
            write!(f, " (0x{:02x})", self.opcode)?;
        }
        if let Some(imm) = &self.immediate {
            write!(f, " 0x{}", hex::encode(imm))?;
        }
        if self.truncated {
            f.write_str(" (truncated)")?;
        }
        Ok(())
    }
}

pub fn disassemble(code: &[u8]) -> Vec<Instruction> {
    let mut out = Vec::with_capacity(code.len());
    let mut pc = 0;
    while pc < code.len() {
        let opcode = code[pc];
        let width = push_width(opcode);
        let (immediate, truncated) = if width == 0 {
            (None, false)
        } else {
            let avail = &code[(pc + 1).min(code.len())..(pc + 1 + width).min(code.len())];
            let mut imm = avail.to_vec();
            let truncated = imm.len() < width;
            imm.resize(width, 0);
            (Some(imm), truncated)
        };
        out.push(Instruction { offset: pc, opcode, immediate, truncated });
        pc += 1 + width;
    }
    out
}

/// Inverse of [`disassemble`]; truncated PUSH tails come back zero-padded.
pub fn assemble(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(instructions.iter().map(Instruction::size).sum());
    for ins in instructions {
        out.push(ins.opcode);
        if let Some(imm) = &ins.immediate {
            out.extend_from_slice(imm);
        }
    }
    out
}

/// Parses the contents of a `.bin` / `.bin-runtime` file: ASCII hex with an
/// optional `0x` prefix and surrounding whitespace.
pub fn parse_hex_code(text: &str) -> Result<Vec<u8>> {
    let text = text.trim();
    let text = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    Ok(hex::decode(text)?)
}
