//! Test-side ABI reader. Works from type strings and raw calldata only and
//! returns each argument in the packed width the genome stores it in.

use sha3::{Digest, Keccak256};

pub fn selector(signature: &str) -> [u8; 4] {
    let d = Keccak256::digest(signature.as_bytes());
    [d[0], d[1], d[2], d[3]]
}

/// Selectors of well-known token functions, as published by the ERC-20 ABI.
pub const PINNED: &[(&str, &str)] = &[
    ("transfer(address,uint256)", "a9059cbb"),
    ("balanceOf(address)", "70a08231"),
    ("approve(address,uint256)", "095ea7b3"),
    ("totalSupply()", "18160ddd"),
    ("transferFrom(address,address,uint256)", "23b872dd"),
];

enum Ty {
    Uint(usize),
    Int(usize),
    Address,
    Bool,
    Fixed(usize),
    Bytes,
    Str,
    List(Box<Ty>),
    Tuple(Box<Ty>, usize),
}

fn parse(t: &str) -> Ty {
    if let Some(inner) = t.strip_suffix("[]") {
        return Ty::List(Box::new(parse(inner)));
    }
    if t.ends_with(']') {
        let open = t.rfind('[').unwrap();
        let k = t[open + 1..t.len() - 1].parse().unwrap();
        return Ty::Tuple(Box::new(parse(&t[..open])), k);
    }
    match t {
        "address" => Ty::Address,
        "bool" => Ty::Bool,
        "bytes" => Ty::Bytes,
        "string" => Ty::Str,
        "uint" => Ty::Uint(256),
        "int" => Ty::Int(256),
        "byte" => Ty::Fixed(1),
        _ => {
            if let Some(n) = t.strip_prefix("uint") {
                Ty::Uint(n.parse().unwrap())
            } else if let Some(n) = t.strip_prefix("int") {
                Ty::Int(n.parse().unwrap())
            } else if let Some(n) = t.strip_prefix("bytes") {
                Ty::Fixed(n.parse().unwrap())
            } else {
                panic!("oracle does not know {t}")
            }
        }
    }
}

fn dynamic(t: &Ty) -> bool {
    matches!(t, Ty::Bytes | Ty::Str | Ty::List(_))
}

fn word(data: &[u8], at: usize) -> Result<&[u8], String> {
    data.get(at..at + 32).ok_or_else(|| format!("word at {at} past end"))
}

fn small(w: &[u8]) -> Result<usize, String> {
    if w[..24].iter().any(|&b| b != 0) {
        return Err("offset or length too large".into());
    }
    Ok(u64::from_be_bytes(w[24..].try_into().unwrap()) as usize)
}

fn static_word(t: &Ty, w: &[u8], out: &mut Vec<u8>) -> Result<(), String> {
    match t {
        Ty::Uint(bits) => {
            let n = bits / 8;
            if w[..32 - n].iter().any(|&b| b != 0) {
                return Err(format!("uint{bits} has dirty high bytes"));
            }
            out.extend_from_slice(&w[32 - n..]);
        }
        Ty::Int(bits) => {
            let n = bits / 8;
            let fill = if w[32 - n] & 0x80 != 0 { 0xff } else { 0 };
            if w[..32 - n].iter().any(|&b| b != fill) {
                return Err(format!("int{bits} is not sign extended"));
            }
            out.extend_from_slice(&w[32 - n..]);
        }
        Ty::Address => {
            if w[..12].iter().any(|&b| b != 0) {
                return Err("address has dirty high bytes".into());
            }
            out.extend_from_slice(&w[12..]);
        }
        Ty::Bool => {
            if w[..31].iter().any(|&b| b != 0) || w[31] > 1 {
                return Err("bool is not 0 or 1".into());
            }
            out.push(w[31]);
        }
        Ty::Fixed(n) => {
            if w[*n..].iter().any(|&b| b != 0) {
                return Err(format!("bytes{n} has dirty padding"));
            }
            out.extend_from_slice(&w[..*n]);
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Reads one head slot (and tail, if dynamic) relative to `base`.
fn read(t: &Ty, data: &[u8], base: usize, head: usize, out: &mut Vec<u8>) -> Result<usize, String> {
    match t {
        Ty::Tuple(elem, k) => {
            let mut at = head;
            for _ in 0..*k {
                at = read(elem, data, base, at, out)?;
            }
            Ok(at)
        }
        _ if dynamic(t) => {
            let tail = base + small(word(data, head)?)?;
            let len = small(word(data, tail)?)?;
            let body = tail + 32;
            match t {
                Ty::Bytes | Ty::Str => {
                    let padded = len.div_ceil(32) * 32;
                    let region = data.get(body..body + padded).ok_or("bytes body past end")?;
                    if region[len..].iter().any(|&b| b != 0) {
                        return Err("bytes tail has dirty padding".into());
                    }
                    out.extend_from_slice(&region[..len]);
                }
                Ty::List(elem) => {
                    let mut at = body;
                    for _ in 0..len {
                        at = read(elem, data, body, at, out)?;
                    }
                }
                _ => unreachable!(),
            }
            Ok(head + 32)
        }
        _ => {
            static_word(t, word(data, head)?, out)?;
            Ok(head + 32)
        }
    }
}

fn tail_end(t: &Ty, data: &[u8], base: usize, head: usize) -> usize {
    match t {
        Ty::Bytes | Ty::Str => {
            let tail = base + small(&data[head..head + 32]).unwrap();
            let len = small(&data[tail..tail + 32]).unwrap();
            tail + 32 + len.div_ceil(32) * 32
        }
        Ty::List(elem) => {
            let tail = base + small(&data[head..head + 32]).unwrap();
            let len = small(&data[tail..tail + 32]).unwrap();
            tail + 32 + len * head_words(elem) * 32
        }
        _ => head + head_words(t) * 32,
    }
}

fn head_words(t: &Ty) -> usize {
    match t {
        Ty::Tuple(elem, k) if !dynamic(elem) => k * head_words(elem),
        _ => 1,
    }
}

/// Splits an argument tuple into the packed value of each parameter, and
/// checks that nothing trails the encoding.
pub fn decode(types: &[&str], data: &[u8]) -> Result<Vec<Vec<u8>>, String> {
    let tys: Vec<Ty> = types.iter().map(|t| parse(t)).collect();
    let mut head = 0;
    let mut end = tys.iter().map(head_words).sum::<usize>() * 32;
    let mut values = Vec::new();
    for t in &tys {
        let mut v = Vec::new();
        let next = read(t, data, 0, head, &mut v)?;
        end = end.max(tail_end(t, data, 0, head));
        head = next;
        values.push(v);
    }
    if end != data.len() {
        return Err(format!("encoding is {} bytes, expected {end}", data.len()));
    }
    Ok(values)
}
