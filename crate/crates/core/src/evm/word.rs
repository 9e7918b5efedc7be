//! Two's-complement helpers over 256-bit words.

use primitive_types::{U256, U512};

pub type Word = U256;

const SIGN_BIT: usize = 255;

#[inline]
pub fn is_negative(x: U256) -> bool {
    x.bit(SIGN_BIT)
}

#[inline]
pub fn negate(x: U256) -> U256 {
    (!x).overflowing_add(U256::one()).0
}

#[inline]
fn abs(x: U256) -> U256 {
    if is_negative(x) {
        negate(x)
    } else {
        x
    }
}

pub fn sdiv(a: U256, b: U256) -> U256 {
    if b.is_zero() {
        return U256::zero();
    }
    let q = abs(a) / abs(b);
    if is_negative(a) != is_negative(b) {
        negate(q)
    } else {
        q
    }
}

pub fn smod(a: U256, b: U256) -> U256 {
    if b.is_zero() {
        return U256::zero();
    }
    let r = abs(a) % abs(b);
    if is_negative(a) {
        negate(r)
    } else {
        r
    }
}

#[inline]
pub fn slt(a: U256, b: U256) -> bool {
    match (is_negative(a), is_negative(b)) {
        (true, false) => true,
        (false, true) => false,
        _ => a < b,
    }
}

pub fn signextend(byte: U256, x: U256) -> U256 {
    if byte >= U256::from(31) {
        return x;
    }
    let bit = byte.low_u64() as usize * 8 + 7;
    let mask = (U256::one() << (bit + 1)) - 1;
    if x.bit(bit) {
        x | !mask
    } else {
        x & mask
    }
}

pub fn byte(index: U256, x: U256) -> U256 {
    if index >= U256::from(32) {
        return U256::zero();
    }
    U256::from(x.byte(31 - index.low_u64() as usize))
}

pub fn shl(shift: U256, x: U256) -> U256 {
    if shift >= U256::from(256) {
        U256::zero()
    } else {
        x << shift.low_u64() as usize
    }
}

pub fn shr(shift: U256, x: U256) -> U256 {
    if shift >= U256::from(256) {
        U256::zero()
    } else {
        x >> shift.low_u64() as usize
    }
}

pub fn sar(shift: U256, x: U256) -> U256 {
    let negative = is_negative(x);
    if shift >= U256::from(256) {
        return if negative { U256::MAX } else { U256::zero() };
    }
    let s = shift.low_u64() as usize;
    if negative {
        !((!x) >> s)
    } else {
        x >> s
    }
}

pub fn addmod(a: U256, b: U256, n: U256) -> U256 {
    if n.is_zero() {
        return U256::zero();
    }
    let sum = U512::from(a) + U512::from(b);
    U256::try_from(sum % U512::from(n)).expect("remainder fits")
}

pub fn mulmod(a: U256, b: U256, n: U256) -> U256 {
    if n.is_zero() {
        return U256::zero();
    }
    U256::try_from(a.full_mul(b) % U512::from(n)).expect("remainder fits")
}

/// Number of significant bytes, as priced by EXP.
pub fn byte_len(x: U256) -> u64 {
    (x.bits() as u64).div_ceil(8)
}

pub fn from_bool(b: bool) -> U256 {
    if b {
        U256::one()
    } else {
        U256::zero()
    }
}
