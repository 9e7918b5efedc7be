//! Operand- and state-dependent gas rules.

use primitive_types::U256;

pub const TX_BASE: u64 = 21_000;
pub const TX_CREATE: u64 = 32_000;
pub const TX_DATA_ZERO: u64 = 4;
pub const TX_DATA_NONZERO: u64 = 68;

pub const MEMORY_WORD: u64 = 3;
pub const QUAD_COEFF_DIV: u64 = 512;
pub const COPY_WORD: u64 = 3;
pub const SHA3_WORD: u64 = 6;
pub const LOG_DATA_BYTE: u64 = 8;
pub const EXP_BYTE: u64 = 50;

pub const SSTORE_SET: u64 = 20_000;
pub const SSTORE_RESET: u64 = 5_000;
/// Credited per storage slot cleared; capped at half the gas used overall.
pub const SSTORE_CLEAR_REFUND: u64 = 15_000;
pub const SELFDESTRUCT_REFUND: u64 = 24_000;
pub const SELFDESTRUCT_NEW_ACCOUNT: u64 = 25_000;

pub const CALL_BASE: u64 = 700;
pub const CALL_VALUE: u64 = 9_000;
pub const CALL_NEW_ACCOUNT: u64 = 25_000;
pub const CALL_STIPEND: u64 = 2_300;

pub const CODE_DEPOSIT_BYTE: u64 = 200;

/// Block gas limit used when none is configured.
pub const DEFAULT_GAS_LIMIT: u64 = 80_039_143;

pub fn intrinsic_gas(data: &[u8], is_create: bool) -> u64 {
    let zeros = data.iter().filter(|&&b| b == 0).count() as u64;
    let nonzeros = data.len() as u64 - zeros;
    TX_BASE
        + if is_create { TX_CREATE } else { 0 }
        + zeros * TX_DATA_ZERO
        + nonzeros * TX_DATA_NONZERO
}

fn memory_cost(words: u64) -> u64 {
    let words = words as u128;
    let cost = MEMORY_WORD as u128 * words + words * words / QUAD_COEFF_DIV as u128;
    cost.min(u64::MAX as u128) as u64
}

/// Cost of growing active memory from `old_words` to `new_words` 32-byte words.
pub fn memory_expansion_cost(old_words: u64, new_words: u64) -> u64 {
    debug_assert!(new_words >= old_words);
    memory_cost(new_words) - memory_cost(old_words)
}

/// `(gas, refund)` of an SSTORE replacing `current` by `new`.
pub fn sstore_cost(current: U256, new: U256) -> (u64, u64) {
    match (current.is_zero(), new.is_zero()) {
        (true, false) => (SSTORE_SET, 0),
        (false, true) => (SSTORE_RESET, SSTORE_CLEAR_REFUND),
        _ => (SSTORE_RESET, 0),
    }
}

/// Up-front charge of a CALL, excluding memory expansion and forwarded gas.
pub fn call_cost(value: U256, dest_exists: bool) -> u64 {
    let mut cost = CALL_BASE;
    if !value.is_zero() {
        cost += CALL_VALUE;
        if !dest_exists {
            cost += CALL_NEW_ACCOUNT;
        }
    }
    cost
}

/// Refund actually credited at the end of a successful transaction.
pub fn applied_refund(accumulated: u64, gas_used_raw: u64) -> u64 {
    accumulated.min(gas_used_raw / 2)
}

pub fn words(bytes: u64) -> u64 {
    bytes.div_ceil(32)
}

/// Gas the caller may forward: everything but one 64th of what is left.
pub fn max_call_gas(available: u64) -> u64 {
    available - available / 64
}
