//! Hand-priced bytecode snippets. Expected numbers are written out from the
//! Constantinople fee schedule (Gbase 2, Gverylow 3, Glow 5, Gmid 8, Ghigh 10,
//! Gjumpdest 1, Gsload 200, Gbalance 400, Gextcode 700, Gblockhash 20,
//! Gsha3 30 + 6/word, Gcopy 3/word, Gmemory 3/word + w²/512, Glog 375 +
//! 375/topic + 8/byte, Gexp 10 + 50/byte, Gsset 20000, Gsreset 5000,
//! Rsclear 15000, Gcall 700, Gcallvalue 9000, Gnewaccount 25000, stipend 2300,
//! Gselfdestruct 5000, Rselfdestruct 24000, Gtransaction 21000,
//! Gtxdatazero 4, Gtxdatanonzero 68) without consulting the interpreter.

#![allow(dead_code)]

use gasfuzz_core::evm::{self, Address, ExecutionEnv, Status, WorldState, DEFAULT_GAS_LIMIT};
use gasfuzz_core::Word as U256;
use gasfuzz_core::Wcfg;

pub const CONTRACT: Address = Address::from_low_u8(0xc0);
pub const SENDER: Address = Address::from_low_u8(0xca);

/// Opcode names known to the test assembler.
const OPS: &[(&str, u8)] = &[
    ("STOP", 0x00), ("ADD", 0x01), ("MUL", 0x02), ("SUB", 0x03), ("DIV", 0x04), ("SDIV", 0x05),
    ("MOD", 0x06), ("SMOD", 0x07), ("ADDMOD", 0x08), ("MULMOD", 0x09), ("EXP", 0x0a),
    ("SIGNEXTEND", 0x0b), ("LT", 0x10), ("GT", 0x11), ("SLT", 0x12), ("SGT", 0x13), ("EQ", 0x14),
    ("ISZERO", 0x15), ("AND", 0x16), ("OR", 0x17), ("XOR", 0x18), ("NOT", 0x19), ("BYTE", 0x1a),
    ("SHL", 0x1b), ("SHR", 0x1c), ("SAR", 0x1d), ("SHA3", 0x20), ("ADDRESS", 0x30),
    ("BALANCE", 0x31), ("ORIGIN", 0x32), ("CALLER", 0x33), ("CALLVALUE", 0x34),
    ("CALLDATALOAD", 0x35), ("CALLDATASIZE", 0x36), ("CALLDATACOPY", 0x37), ("CODESIZE", 0x38),
    ("CODECOPY", 0x39), ("GASPRICE", 0x3a), ("EXTCODESIZE", 0x3b), ("EXTCODECOPY", 0x3c),
    ("RETURNDATASIZE", 0x3d), ("RETURNDATACOPY", 0x3e), ("EXTCODEHASH", 0x3f),
    ("BLOCKHASH", 0x40), ("COINBASE", 0x41), ("TIMESTAMP", 0x42), ("NUMBER", 0x43),
    ("DIFFICULTY", 0x44), ("GASLIMIT", 0x45), ("POP", 0x50), ("MLOAD", 0x51), ("MSTORE", 0x52),
    ("MSTORE8", 0x53), ("SLOAD", 0x54), ("SSTORE", 0x55), ("JUMP", 0x56), ("JUMPI", 0x57),
    ("PC", 0x58), ("MSIZE", 0x59), ("GAS", 0x5a), ("JUMPDEST", 0x5b), ("DUP1", 0x80),
    ("DUP16", 0x8f), ("SWAP1", 0x90), ("SWAP16", 0x9f), ("LOG0", 0xa0), ("LOG1", 0xa1),
    ("LOG2", 0xa2), ("LOG3", 0xa3), ("LOG4", 0xa4), ("CREATE", 0xf0), ("CALL", 0xf1),
    ("RETURN", 0xf3), ("DELEGATECALL", 0xf4), ("STATICCALL", 0xfa), ("REVERT", 0xfd),
    ("INVALID", 0xfe), ("SELFDESTRUCT", 0xff),
];

/// Assembles whitespace-separated mnemonics. `PUSHn` takes the next token as
/// a hex immediate, left-padded to n bytes.
pub fn asm(src: &str) -> Vec<u8> {
    let mut out = Vec::new();
    let mut tokens = src.split_whitespace();
    while let Some(t) = tokens.next() {
        if let Some(n) = t.strip_prefix("PUSH") {
            let n: usize = n.parse().expect("push width");
            let imm = tokens.next().expect("push immediate").trim_start_matches("0x");
            let imm = if imm.len() % 2 == 1 { format!("0{imm}") } else { imm.to_string() };
            let bytes = hex::decode(imm).expect("hex immediate");
            assert!(bytes.len() <= n, "immediate wider than PUSH{n}");
            out.push(0x5f + n as u8);
            out.extend(std::iter::repeat_n(0, n - bytes.len()));
            out.extend(bytes);
        } else if let Some(byte) = t.strip_prefix("0x") {
            out.push(u8::from_str_radix(byte, 16).expect("raw byte"));
        } else {
            let (_, code) = OPS.iter().find(|(name, _)| *name == t).unwrap_or_else(|| panic!("unknown mnemonic {t}"));
            out.push(*code);
        }
    }
    out
}

pub struct Snippet {
    pub name: &'static str,
    pub code: Vec<u8>,
    pub calldata: Vec<u8>,
    pub gas_limit: u64,
    /// Value held in slot 0 before the call.
    pub slot0: u64,
    pub status: Status,
    pub gas_used: u64,
}

fn ok(name: &'static str, src: &str, exec: u64) -> Snippet {
    Snippet {
        name,
        code: asm(src),
        calldata: Vec::new(),
        gas_limit: DEFAULT_GAS_LIMIT,
        slot0: 0,
        status: Status::Success,
        gas_used: 21_000 + exec,
    }
}

fn fails(name: &'static str, src: &str, status: Status) -> Snippet {
    Snippet {
        status,
        gas_used: DEFAULT_GAS_LIMIT,
        ..ok(name, src, 0)
    }
}

pub fn snippets() -> Vec<Snippet> {
    let mut v = vec![
        ok("stop", "STOP", 0),
        ok("empty code", "", 0),
        ok("add", "PUSH1 1 PUSH1 2 ADD STOP", 3 + 3 + 3),
        ok("mul", "PUSH1 3 PUSH1 4 MUL", 3 + 3 + 5),
        ok("sub", "PUSH1 3 PUSH1 4 SUB", 3 + 3 + 3),
        ok("div", "PUSH1 3 PUSH1 9 DIV", 3 + 3 + 5),
        ok("sdiv", "PUSH1 3 PUSH1 9 SDIV", 3 + 3 + 5),
        ok("mod", "PUSH1 3 PUSH1 9 MOD", 3 + 3 + 5),
        ok("smod", "PUSH1 3 PUSH1 9 SMOD", 3 + 3 + 5),
        ok("addmod", "PUSH1 5 PUSH1 3 PUSH1 9 ADDMOD", 3 * 3 + 8),
        ok("mulmod", "PUSH1 5 PUSH1 3 PUSH1 9 MULMOD", 3 * 3 + 8),
        ok("exp zero exponent", "PUSH1 0 PUSH1 2 EXP", 3 + 3 + 10),
        ok("exp one byte exponent", "PUSH1 ff PUSH1 2 EXP", 3 + 3 + 10 + 50),
        ok("exp three byte exponent", "PUSH3 010000 PUSH1 2 EXP", 3 + 3 + 10 + 3 * 50),
        ok("signextend", "PUSH1 ff PUSH1 0 SIGNEXTEND", 3 + 3 + 5),
        ok("lt gt", "PUSH1 1 PUSH1 2 LT PUSH1 1 PUSH1 2 GT", 2 * (3 + 3 + 3)),
        ok("slt sgt eq", "PUSH1 1 PUSH1 2 SLT PUSH1 1 PUSH1 2 SGT EQ", 2 * 9 + 3),
        ok("iszero not", "PUSH1 0 ISZERO NOT", 3 + 3 + 3),
        ok("and or xor", "PUSH1 1 PUSH1 2 AND PUSH1 3 OR PUSH1 4 XOR", 4 * 3 + 3 * 3),
        ok("byte shl shr sar", "PUSH1 1 PUSH1 31 BYTE PUSH1 1 SHL PUSH1 1 SHR PUSH1 1 SAR", 3 + 3 + 3 + 3 * (3 + 3)),
        ok("sha3 empty", "PUSH1 0 PUSH1 0 SHA3", 3 + 3 + 30),
        ok("sha3 one word", "PUSH1 20 PUSH1 0 SHA3", 3 + 3 + 30 + 6 + 3),
        ok("sha3 two words", "PUSH1 40 PUSH1 0 SHA3", 3 + 3 + 30 + 12 + 6),
        ok(
            "context reads",
            "ADDRESS ORIGIN CALLER CALLVALUE CALLDATASIZE CODESIZE GASPRICE RETURNDATASIZE",
            8 * 2,
        ),
        ok("block reads", "COINBASE TIMESTAMP NUMBER DIFFICULTY GASLIMIT", 5 * 2),
        ok("balance", "PUSH1 0 BALANCE", 3 + 400),
        ok("extcodesize", "PUSH1 0 EXTCODESIZE", 3 + 700),
        ok("extcodehash", "PUSH1 0 EXTCODEHASH", 3 + 400),
        ok("blockhash", "PUSH1 0 BLOCKHASH", 3 + 20),
        ok("calldatacopy one word", "PUSH1 20 PUSH1 0 PUSH1 0 CALLDATACOPY", 9 + 3 + 3 + 3),
        ok("codecopy two words", "PUSH1 40 PUSH1 0 PUSH1 0 CODECOPY", 9 + 3 + 6 + 6),
        ok("extcodecopy one word", "PUSH1 20 PUSH1 0 PUSH1 0 PUSH1 0 EXTCODECOPY", 12 + 700 + 3 + 3),
        ok("returndatacopy nothing", "PUSH1 0 PUSH1 0 PUSH1 0 RETURNDATACOPY", 9 + 3),
        ok("pop", "PUSH1 1 POP", 3 + 2),
        ok("mload fresh word", "PUSH1 0 MLOAD", 3 + 3 + 3),
        ok("mstore second word", "PUSH1 1 PUSH1 20 MSTORE", 3 + 3 + 3 + 6),
        ok("mstore8", "PUSH1 1 PUSH1 0 MSTORE8", 3 + 3 + 3 + 3),
        // 1024 words: 3·1024 + 1024²/512
        ok("memory quadratic term", "PUSH1 1 PUSH2 7fe0 MSTORE", 3 + 3 + 3 + 3072 + 2048),
        ok("mstore twice same word", "PUSH1 1 PUSH1 0 MSTORE PUSH1 2 PUSH1 0 MSTORE", 2 * 9 + 3),
        ok("sload", "PUSH1 0 SLOAD", 3 + 200),
        ok("sstore set", "PUSH1 1 PUSH1 0 SSTORE", 3 + 3 + 20_000),
        ok("sstore zero to zero", "PUSH1 0 PUSH1 0 SSTORE", 3 + 3 + 5_000),
        ok("sstore set then reset", "PUSH1 1 PUSH1 0 SSTORE PUSH1 2 PUSH1 0 SSTORE", 20_006 + 5_006),
        ok("jump", "PUSH1 4 JUMP INVALID JUMPDEST STOP", 3 + 8 + 1),
        ok("jumpi taken", "PUSH1 1 PUSH1 6 JUMPI INVALID JUMPDEST STOP", 3 + 3 + 10 + 1),
        ok("jumpi not taken", "PUSH1 0 PUSH1 6 JUMPI STOP", 3 + 3 + 10),
        ok("pc msize gas", "PC MSIZE GAS", 3 * 2),
        ok("jumpdest", "JUMPDEST JUMPDEST", 2),
        ok("push32", "PUSH32 ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff", 3),
        ok(
            "dup16",
            "PUSH1 1 PUSH1 2 PUSH1 3 PUSH1 4 PUSH1 5 PUSH1 6 PUSH1 7 PUSH1 8 \
             PUSH1 9 PUSH1 a PUSH1 b PUSH1 c PUSH1 d PUSH1 e PUSH1 f PUSH1 10 DUP16",
            16 * 3 + 3,
        ),
        ok(
            "swap16",
            "PUSH1 1 PUSH1 2 PUSH1 3 PUSH1 4 PUSH1 5 PUSH1 6 PUSH1 7 PUSH1 8 \
             PUSH1 9 PUSH1 a PUSH1 b PUSH1 c PUSH1 d PUSH1 e PUSH1 f PUSH1 10 PUSH1 11 SWAP16",
            17 * 3 + 3,
        ),
        ok("dup1 swap1", "PUSH1 1 DUP1 SWAP1", 3 * 3),
        ok("log0", "PUSH1 0 PUSH1 0 LOG0", 6 + 375),
        ok("log2 one word", "PUSH1 0 PUSH1 0 PUSH1 20 PUSH1 0 LOG2", 12 + 375 + 2 * 375 + 32 * 8 + 3),
        ok("log4", "PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 LOG4", 18 + 375 + 4 * 375),
        ok("log1 log3", "PUSH1 0 PUSH1 0 PUSH1 0 LOG1 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 LOG3", 9 + 750 + 15 + 1500),
        ok("call without value", "PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 77 PUSH1 0 CALL", 7 * 3 + 700),
        ok(
            "call with value to new account",
            "PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 1 PUSH1 77 PUSH1 0 CALL",
            7 * 3 + 700 + 9_000 + 25_000 - 2_300,
        ),
        ok(
            "call with value to existing account",
            "PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 0 PUSH1 1 ADDRESS PUSH1 0 CALL",
            6 * 3 + 2 + 700 + 9_000 - 2_300,
        ),
        ok("return one word", "PUSH1 20 PUSH1 0 RETURN", 3 + 3 + 3),
        ok("truncated push", "PUSH1 1 0x61 0x01", 3 + 3),
        fails("invalid", "INVALID", Status::InvalidOp),
        fails("undefined opcode", "0x0c", Status::InvalidOp),
        fails("create is unsupported", "PUSH1 0 DUP1 DUP1 CREATE", Status::InvalidOp),
        fails("staticcall is unsupported", "PUSH1 0 DUP1 DUP1 DUP1 DUP1 DUP1 STATICCALL", Status::InvalidOp),
        fails("stack underflow", "PUSH1 1 ADD", Status::StackError),
        fails("bad jump", "PUSH1 0 JUMP", Status::BadJump),
        fails("jump into push data", "PUSH1 3 JUMP PUSH1 5b", Status::BadJump),
        fails("returndatacopy past end", "PUSH1 1 PUSH1 0 PUSH1 0 RETURNDATACOPY", Status::InvalidOp),
    ];

    v.push(Snippet {
        status: Status::Revert,
        ..ok("revert", "PUSH1 0 PUSH1 0 REVERT", 3 + 3)
    });
    v.push(Snippet {
        gas_limit: 21_005,
        status: Status::OutOfGas,
        gas_used: 21_005,
        ..ok("out of gas on second push", "PUSH1 1 PUSH1 1", 0)
    });
    v.push(Snippet {
        calldata: vec![0, 0, 1, 2],
        ..ok("calldata bytes", "STOP", 2 * 4 + 2 * 68)
    });
    v.push(Snippet {
        calldata: vec![0xaa],
        ..ok("calldataload", "PUSH1 0 CALLDATALOAD", 68 + 3 + 3)
    });
    // raw 21000 + 20006 + 5006 = 46012; refund min(15000, 23006)
    v.push(Snippet {
        gas_used: 46_012 - 15_000,
        ..ok("sstore set then clear", "PUSH1 1 PUSH1 0 SSTORE PUSH1 0 PUSH1 0 SSTORE", 0)
    });
    // raw 21000 + 5006 = 26006; refund capped at 13003
    v.push(Snippet {
        slot0: 7,
        gas_used: 26_006 - 13_003,
        ..ok("sstore clear capped at half", "PUSH1 0 PUSH1 0 SSTORE", 0)
    });
    // raw 21000 + 3 + 5000 + 25000 = 51003; refund 24000 < 25501
    v.push(Snippet {
        gas_used: 51_003 - 24_000,
        ..ok("selfdestruct to new account", "PUSH1 77 SELFDESTRUCT", 0)
    });
    v
}

/// World used by every snippet: the contract holds some balance and code.
pub fn world(code: &[u8], slot0: u64) -> WorldState {
    let mut w = WorldState::new();
    w.set_balance(CONTRACT, U256::from(1_000_000u64));
    w.set_code(CONTRACT, code.to_vec());
    w.set_balance(SENDER, U256::from(1_000_000u64));
    if slot0 != 0 {
        w.set_storage(CONTRACT, U256::zero(), U256::from(slot0));
    }
    w
}

/// Runs one snippet and returns `(status, gas_used)`.
pub fn run(s: &Snippet) -> (Status, u64) {
    let env = ExecutionEnv {
        address: CONTRACT,
        sender: SENDER,
        origin: SENDER,
        gas_limit: s.gas_limit,
        ..ExecutionEnv::default()
    };
    let mut w = world(&s.code, s.slot0);
    let cfg = Wcfg::from_code(&s.code);
    let r = evm::execute(&s.code, &s.calldata, &env, &mut w, &cfg);
    (r.status, r.gas_used)
}
