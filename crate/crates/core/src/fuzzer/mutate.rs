//! Byte-level mutators over a gene.

use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abi::{self, AbiType, EnvField, Gene, GeneMap};

/// Default upper bound for the array-resize mutator.
pub const MAX_ARRAY_LEN: usize = 1024;

/// Smallest and largest magnitude added or subtracted by the arithmetic mutator.
pub const ARITH_MAX: u64 = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutator {
    BitFlip,
    ByteFlip,
    Arith,
    Interesting,
    ArrayResize,
    EnvRegen,
}

impl Mutator {
    pub const ALL: [Mutator; 6] = [
        Mutator::BitFlip,
        Mutator::ByteFlip,
        Mutator::Arith,
        Mutator::Interesting,
        Mutator::ArrayResize,
        Mutator::EnvRegen,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationConfig {
    pub max_array_len: usize,
    /// Whether sender and origin are fuzzed; when not, regenerating them would
    /// be wasted work.
    pub regen_sender: bool,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            max_array_len: MAX_ARRAY_LEN,
            regen_sender: false,
        }
    }
}

/// Applies one mutator chosen uniformly at random.
pub fn mutate<R: Rng + ?Sized>(
    gene: &Gene,
    map: &Arc<GeneMap>,
    rng: &mut R,
    config: &MutationConfig,
) -> (Gene, Arc<GeneMap>) {
    let kind = Mutator::ALL[rng.gen_range(0..Mutator::ALL.len())];
    mutate_with(kind, gene, map, rng, config)
}

/// Applies `kind`. Mutators that find nothing to act on (no integer or no
/// dynamic value) fall back to a byte flip.
pub fn mutate_with<R: Rng + ?Sized>(
    kind: Mutator,
    gene: &Gene,
    map: &Arc<GeneMap>,
    rng: &mut R,
    config: &MutationConfig,
) -> (Gene, Arc<GeneMap>) {
    let mut out = gene.clone();
    if out.is_empty() {
        return (out, Arc::clone(map));
    }
    match kind {
        Mutator::BitFlip => {
            let bit = rng.gen_range(0..out.len() * 8);
            out.bytes[bit / 8] ^= 1 << (bit % 8);
            clamp_at(&mut out, map, bit / 8);
        }
        Mutator::ByteFlip => byte_flip(&mut out, map, rng),
        Mutator::Arith => match pick_integer(map, rng) {
            Some((window, _)) => {
                let delta = rng.gen_range(1..=ARITH_MAX);
                let window = &mut out.bytes[window];
                if rng.gen_bool(0.5) {
                    add_be(window, delta);
                } else {
                    sub_be(window, delta);
                }
            }
            None => byte_flip(&mut out, map, rng),
        },
        Mutator::Interesting => match pick_integer(map, rng) {
            Some((window, signed)) => {
                let window = &mut out.bytes[window];
                if rng.gen_bool(0.5) {
                    window.fill(0);
                } else {
                    window.fill(0xff);
                    if signed {
                        window[0] = 0x7f;
                    }
                }
            }
            None => byte_flip(&mut out, map, rng),
        },
        Mutator::ArrayResize => {
            let dynamic: Vec<usize> = map
                .entries()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.ty.is_dynamic())
                .map(|(i, _)| i)
                .collect();
            if dynamic.is_empty() {
                byte_flip(&mut out, map, rng);
            } else {
                let index = dynamic[rng.gen_range(0..dynamic.len())];
                let len = rng.gen_range(0..=config.max_array_len);
                let payload = abi::random_dynamic(&map.entries()[index].ty, len, rng);
                let mut new_map = GeneMap::clone(map);
                new_map.resize(&mut out, index, len, payload);
                return (out, Arc::new(new_map));
            }
        }
        Mutator::EnvRegen => {
            let fields: Vec<EnvField> = EnvField::ALL
                .into_iter()
                .filter(|f| config.regen_sender || !matches!(f, EnvField::Sender | EnvField::Origin))
                .filter(|f| map.env(*f).is_some())
                .collect();
            if fields.is_empty() {
                byte_flip(&mut out, map, rng);
            } else {
                let field = fields[rng.gen_range(0..fields.len())];
                let entry = map.env(field).expect("filtered above");
                let value = abi::random_static(&entry.ty, rng);
                out.bytes[entry.range.clone()].copy_from_slice(&value);
            }
        }
    }
    (out, Arc::clone(map))
}

fn byte_flip<R: Rng + ?Sized>(gene: &mut Gene, map: &GeneMap, rng: &mut R) {
    let pos = rng.gen_range(0..gene.len());
    gene.bytes[pos] ^= 0xff;
    clamp_at(gene, map, pos);
}

/// Restores type validity of the entry covering byte `pos`.
fn clamp_at(gene: &mut Gene, map: &GeneMap, pos: usize) {
    let idx = map.entries().partition_point(|e| e.range.end <= pos);
    if let Some(e) = map.entries().get(idx) {
        abi::clamp_bools(&e.ty, &mut gene.bytes[e.range.clone()]);
    }
}

fn integer_element(ty: &AbiType) -> Option<(usize, bool)> {
    match ty {
        AbiType::Uint(bits) => Some((bits / 8, false)),
        AbiType::Int(bits) => Some((bits / 8, true)),
        _ => None,
    }
}

/// Integer windows in an entry: `(first window start, width, count, signed)`.
fn integer_windows(ty: &AbiType, range: &Range<usize>) -> Option<(usize, usize, usize, bool)> {
    match ty {
        AbiType::Array(elem) | AbiType::FixedArray(elem, _) => {
            let (w, signed) = integer_element(elem)?;
            Some((range.start, w, range.len() / w, signed))
        }
        other => {
            let (w, signed) = integer_element(other)?;
            Some((range.start, w, 1, signed))
        }
    }
}

/// A uniformly chosen integer-typed window, together with its signedness.
fn pick_integer<R: Rng + ?Sized>(map: &GeneMap, rng: &mut R) -> Option<(Range<usize>, bool)> {
    let windows: Vec<_> = map
        .entries()
        .iter()
        .filter_map(|e| integer_windows(&e.ty, &e.range))
        .filter(|&(_, _, count, _)| count > 0)
        .collect();
    let total: usize = windows.iter().map(|w| w.2).sum();
    if total == 0 {
        return None;
    }
    let mut k = rng.gen_range(0..total);
    for (start, width, count, signed) in windows {
        if k < count {
            let s = start + k * width;
            return Some((s..s + width, signed));
        }
        k -= count;
    }
    unreachable!("index drawn below the window count")
}

/// Big-endian add modulo 2^(8·len).
fn add_be(bytes: &mut [u8], delta: u64) {
    let mut carry = delta as u128;
    for b in bytes.iter_mut().rev() {
        if carry == 0 {
            break;
        }
        let sum = *b as u128 + (carry & 0xff);
        *b = sum as u8;
        carry = (carry >> 8) + (sum >> 8);
    }
}

/// Big-endian subtract modulo 2^(8·len).
fn sub_be(bytes: &mut [u8], delta: u64) {
    let mut borrow = delta as i128;
    for b in bytes.iter_mut().rev() {
        if borrow == 0 {
            break;
        }
        let mut v = *b as i128 - (borrow & 0xff);
        borrow >>= 8;
        if v < 0 {
            v += 256;
            borrow += 1;
        }
        *b = v as u8;
    }
}
