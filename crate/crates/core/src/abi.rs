//! ABI parsing, selectors, the flat input genome and calldata encoding.
//!
//! A [`Gene`] is a flat byte string holding every fuzzed value in its natural
//! width (a `uint256` takes 32 bytes, a `uint8` one byte, an `address` 20). A
//! [`GeneMap`] records which byte range belongs to which parameter or
//! environment variable, and the current length of each dynamic value.

use std::fmt;
use std::ops::Range;

use primitive_types::U256;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evm::Address;
use crate::hash::keccak256;

/// Upper bound on the length of dynamic values in a freshly generated gene.
pub const INITIAL_MAX_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiType {
    Uint(usize),
    Int(usize),
    Address,
    Bool,
    FixedBytes(usize),
    Bytes,
    String,
    /// `T[]`; `T` is always static.
    Array(Box<AbiType>),
    /// `T[k]`; `T` is always static.
    FixedArray(Box<AbiType>, usize),
}

impl AbiType {
    /// Parses a type descriptor, accepting the `uint`, `int` and `byte` aliases.
    pub fn parse(text: &str) -> Option<AbiType> {
        let text = text.trim();
        if let Some(inner) = text.strip_suffix(']') {
            let open = inner.rfind('[')?;
            let elem = AbiType::parse(&inner[..open])?;
            if elem.is_dynamic() {
                return None;
            }
            let size = &inner[open + 1..];
            return if size.is_empty() {
                Some(AbiType::Array(Box::new(elem)))
            } else {
                let k: usize = size.parse().ok()?;
                (k > 0 && !size.starts_with('0')).then(|| AbiType::FixedArray(Box::new(elem), k))
            };
        }
        let bits = |digits: &str| -> Option<usize> {
            if digits.is_empty() {
                return Some(256);
            }
            if digits.starts_with('0') {
                return None;
            }
            let n: usize = digits.parse().ok()?;
            (n.is_multiple_of(8) && (8..=256).contains(&n)).then_some(n)
        };
        match text {
            "address" => Some(AbiType::Address),
            "bool" => Some(AbiType::Bool),
            "bytes" => Some(AbiType::Bytes),
            "string" => Some(AbiType::String),
            "byte" => Some(AbiType::FixedBytes(1)),
            _ => {
                if let Some(rest) = text.strip_prefix("uint") {
                    bits(rest).map(AbiType::Uint)
                } else if let Some(rest) = text.strip_prefix("int") {
                    bits(rest).map(AbiType::Int)
                } else if let Some(rest) = text.strip_prefix("bytes") {
                    if rest.starts_with('0') {
                        return None;
                    }
                    let n: usize = rest.parse().ok()?;
                    (1..=32).contains(&n).then_some(AbiType::FixedBytes(n))
                } else {
                    None
                }
            }
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, AbiType::Bytes | AbiType::String | AbiType::Array(_))
    }

    /// Gene bytes taken by a static value; `None` for dynamic types.
    pub fn static_width(&self) -> Option<usize> {
        match self {
            AbiType::Uint(bits) | AbiType::Int(bits) => Some(bits / 8),
            AbiType::Address => Some(20),
            AbiType::Bool => Some(1),
            AbiType::FixedBytes(n) => Some(*n),
            AbiType::FixedArray(elem, k) => elem.static_width().map(|w| w * k),
            AbiType::Bytes | AbiType::String | AbiType::Array(_) => None,
        }
    }

    /// Gene bytes per unit of length of a dynamic value.
    pub fn unit_width(&self) -> usize {
        match self {
            AbiType::Bytes | AbiType::String => 1,
            AbiType::Array(elem) => elem.static_width().expect("array elements are static"),
            other => other.static_width().expect("static type"),
        }
    }

    /// Bytes of the head slot(s) this type occupies in an encoded tuple.
    fn head_size(&self) -> usize {
        match self {
            AbiType::FixedArray(elem, k) => elem.head_size() * k,
            _ => 32,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, AbiType::Uint(_) | AbiType::Int(_))
    }
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiType::Uint(bits) => write!(f, "uint{bits}"),
            AbiType::Int(bits) => write!(f, "int{bits}"),
            AbiType::Address => f.write_str("address"),
            AbiType::Bool => f.write_str("bool"),
            AbiType::FixedBytes(n) => write!(f, "bytes{n}"),
            AbiType::Bytes => f.write_str("bytes"),
            AbiType::String => f.write_str("string"),
            AbiType::Array(elem) => write!(f, "{elem}[]"),
            AbiType::FixedArray(elem, k) => write!(f, "{elem}[{k}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: AbiType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    pub name: String,
    pub inputs: Vec<Param>,
    pub is_constructor: bool,
    pub is_payable: bool,
}

impl FunctionSpec {
    /// Canonical signature, e.g. `transfer(address,uint256)`.
    pub fn signature(&self) -> String {
        let types: Vec<String> = self.inputs.iter().map(|p| p.ty.to_string()).collect();
        format!("{}({})", self.name, types.join(","))
    }

    pub fn selector(&self) -> [u8; 4] {
        selector(self)
    }
}

pub fn selector(spec: &FunctionSpec) -> [u8; 4] {
    signature_selector(&spec.signature())
}

pub fn signature_selector(signature: &str) -> [u8; 4] {
    let digest = keccak256(signature.as_bytes());
    [digest[0], digest[1], digest[2], digest[3]]
}

#[derive(Deserialize)]
struct RawEntry {
    #[serde(rename = "type", default = "default_entry_type")]
    kind: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    inputs: Vec<RawParam>,
    #[serde(default)]
    payable: Option<bool>,
    #[serde(rename = "stateMutability", default)]
    state_mutability: Option<String>,
}

#[derive(Deserialize)]
struct RawParam {
    #[serde(default)]
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

fn default_entry_type() -> String {
    "function".into()
}

/// Functions and the constructor declared in an ABI JSON document.
pub fn parse_abi(json: &str) -> Result<Vec<FunctionSpec>> {
    let raw: Vec<RawEntry> = serde_json::from_str(json).map_err(Error::AbiJson)?;
    let mut specs = Vec::new();
    for entry in raw {
        let is_constructor = match entry.kind.as_str() {
            "function" => false,
            "constructor" => true,
            _ => continue,
        };
        let label = if is_constructor {
            "constructor".to_string()
        } else {
            entry.name.clone()
        };
        if !is_constructor && entry.name.is_empty() {
            return Err(Error::AbiEntry {
                entry: label,
                reason: "function without a name".into(),
            });
        }
        let mut inputs = Vec::with_capacity(entry.inputs.len());
        for p in entry.inputs {
            let ty = AbiType::parse(&p.ty).ok_or_else(|| Error::UnsupportedType {
                entry: label.clone(),
                ty: p.ty.clone(),
            })?;
            inputs.push(Param { name: p.name, ty });
        }
        let is_payable = entry.payable.unwrap_or(false)
            || entry.state_mutability.as_deref() == Some("payable");
        specs.push(FunctionSpec {
            name: entry.name,
            inputs,
            is_constructor,
            is_payable,
        });
    }
    Ok(specs)
}

/// Block and transaction variables that are fuzzed alongside the arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvField {
    Coinbase,
    Difficulty,
    Number,
    Timestamp,
    Sender,
    Origin,
}

impl EnvField {
    pub const ALL: [EnvField; 6] = [
        EnvField::Coinbase,
        EnvField::Difficulty,
        EnvField::Number,
        EnvField::Timestamp,
        EnvField::Sender,
        EnvField::Origin,
    ];

    pub fn ty(self) -> AbiType {
        match self {
            EnvField::Coinbase | EnvField::Sender | EnvField::Origin => AbiType::Address,
            EnvField::Difficulty => AbiType::Uint(256),
            EnvField::Number | EnvField::Timestamp => AbiType::Uint(64),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvField::Coinbase => "coinbase",
            EnvField::Difficulty => "difficulty",
            EnvField::Number => "number",
            EnvField::Timestamp => "timestamp",
            EnvField::Sender => "sender",
            EnvField::Origin => "origin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GeneKey {
    Param {
        /// Canonical signature of the owning function, so overloads stay apart.
        function: String,
        inputs: usize,
        name: String,
        ty: String,
    },
    Env(EnvField),
}

impl fmt::Display for GeneKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneKey::Param {
                function,
                inputs,
                name,
                ty,
            } => write!(f, "{function}/{inputs}/{name}/{ty}"),
            GeneKey::Env(field) => write!(f, "env/{}", field.name()),
        }
    }
}

fn param_key(spec: &FunctionSpec, index: usize) -> GeneKey {
    let p = &spec.inputs[index];
    GeneKey::Param {
        function: spec.signature(),
        inputs: spec.inputs.len(),
        name: if p.name.is_empty() {
            format!("arg{index}")
        } else {
            p.name.clone()
        },
        ty: p.ty.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneEntry {
    pub key: GeneKey,
    pub ty: AbiType,
    pub range: Range<usize>,
    /// Current length (bytes or elements) of a dynamic value.
    pub len: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gene {
    pub bytes: Vec<u8>,
}

impl Gene {
    pub fn new(bytes: Vec<u8>) -> Self {
        Gene { bytes }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// Entries tile the gene in order: parameters first, then the environment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneMap {
    entries: Vec<GeneEntry>,
}

impl GeneMap {
    pub fn entries(&self) -> &[GeneEntry] {
        &self.entries
    }

    pub fn find(&self, key: &GeneKey) -> Option<&GeneEntry> {
        self.entries.iter().find(|e| &e.key == key)
    }

    pub fn env(&self, field: EnvField) -> Option<&GeneEntry> {
        self.find(&GeneKey::Env(field))
    }

    pub fn total_len(&self) -> usize {
        self.entries.last().map_or(0, |e| e.range.end)
    }

    /// Checks that the entries tile `gene` exactly and that every range has the
    /// width its type and length call for.
    pub fn check(&self, gene: &Gene) -> bool {
        let mut cursor = 0;
        for e in &self.entries {
            if e.range.start != cursor {
                return false;
            }
            let expected = match (e.ty.static_width(), e.len) {
                (Some(w), None) => w,
                (None, Some(len)) => len * e.ty.unit_width(),
                _ => return false,
            };
            if e.range.len() != expected {
                return false;
            }
            if e.ty == AbiType::Bool && gene.bytes[e.range.clone()].iter().any(|&b| b > 1) {
                return false;
            }
            cursor = e.range.end;
        }
        cursor == gene.len()
    }

    /// Replaces the value of dynamic entry `index` by `payload` holding `len`
    /// units and shifts every later range.
    pub fn resize(&mut self, gene: &mut Gene, index: usize, len: usize, payload: Vec<u8>) {
        let entry = &mut self.entries[index];
        debug_assert!(entry.ty.is_dynamic());
        debug_assert_eq!(payload.len(), len * entry.ty.unit_width());
        let old = entry.range.clone();
        let new_end = old.start + payload.len();
        let delta = new_end as isize - old.end as isize;
        gene.bytes.splice(old.clone(), payload);
        entry.range = old.start..new_end;
        entry.len = Some(len);
        for later in &mut self.entries[index + 1..] {
            later.range = (later.range.start as isize + delta) as usize
                ..(later.range.end as isize + delta) as usize;
        }
    }

    /// Entries holding the parameters of `spec`, in declaration order.
    fn params_of(&self, spec: &FunctionSpec) -> Result<Vec<&GeneEntry>> {
        (0..spec.inputs.len())
            .map(|i| {
                let key = param_key(spec, i);
                self.find(&key)
                    .ok_or_else(|| Error::GeneMismatch(key.to_string()))
            })
            .collect()
    }

    fn push(&mut self, key: GeneKey, ty: AbiType, bytes: usize, len: Option<usize>) {
        let start = self.total_len();
        self.entries.push(GeneEntry {
            key,
            ty,
            range: start..start + bytes,
            len,
        });
    }
}

/// Random bytes for one static value, valid for its type.
pub fn random_static<R: Rng + ?Sized>(ty: &AbiType, rng: &mut R) -> Vec<u8> {
    let width = ty.static_width().expect("static type");
    let mut out = vec![0u8; width];
    rng.fill(out.as_mut_slice());
    clamp_bools(ty, &mut out);
    out
}

/// Random payload of `len` units for a dynamic type.
pub fn random_dynamic<R: Rng + ?Sized>(ty: &AbiType, len: usize, rng: &mut R) -> Vec<u8> {
    match ty {
        AbiType::Array(elem) => {
            let mut out = Vec::with_capacity(len * ty.unit_width());
            for _ in 0..len {
                out.extend(random_static(elem, rng));
            }
            out
        }
        _ => {
            let mut out = vec![0u8; len];
            rng.fill(out.as_mut_slice());
            out
        }
    }
}

/// Forces every bool inside a value of type `ty` into {0, 1}.
pub fn clamp_bools(ty: &AbiType, bytes: &mut [u8]) {
    match ty {
        AbiType::Bool => bytes.iter_mut().for_each(|b| *b &= 1),
        AbiType::FixedArray(elem, _) | AbiType::Array(elem) if contains_bool(elem) => {
            let w = elem.static_width().expect("static element");
            for chunk in bytes.chunks_mut(w) {
                clamp_bools(elem, chunk);
            }
        }
        _ => {}
    }
}

fn contains_bool(ty: &AbiType) -> bool {
    match ty {
        AbiType::Bool => true,
        AbiType::FixedArray(elem, _) | AbiType::Array(elem) => contains_bool(elem),
        _ => false,
    }
}

/// Fresh genome covering every parameter of `specs` followed by the six
/// environment variables.
pub fn random_gene<R: Rng + ?Sized>(specs: &[FunctionSpec], rng: &mut R) -> (Gene, GeneMap) {
    let mut gene = Gene::default();
    let mut map = GeneMap::default();
    for spec in specs {
        for (i, p) in spec.inputs.iter().enumerate() {
            let key = param_key(spec, i);
            if p.ty.is_dynamic() {
                let len = rng.gen_range(0..=INITIAL_MAX_LEN);
                let payload = random_dynamic(&p.ty, len, rng);
                map.push(key, p.ty.clone(), payload.len(), Some(len));
                gene.bytes.extend(payload);
            } else {
                let value = random_static(&p.ty, rng);
                map.push(key, p.ty.clone(), value.len(), None);
                gene.bytes.extend(value);
            }
        }
    }
    for field in EnvField::ALL {
        let ty = field.ty();
        let value = random_static(&ty, rng);
        map.push(GeneKey::Env(field), ty, value.len(), None);
        gene.bytes.extend(value);
    }
    (gene, map)
}

/// [`random_gene`] drawn from a generator seeded with `seed`.
pub fn seeded_gene(specs: &[FunctionSpec], seed: u64) -> (Gene, GeneMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_gene(specs, &mut rng)
}

fn left_pad(bytes: &[u8], fill: u8) -> [u8; 32] {
    let mut word = [fill; 32];
    word[32 - bytes.len()..].copy_from_slice(bytes);
    word
}

/// Standard encoding of one value whose gene bytes are `data`. Static values
/// give their inline encoding, dynamic ones their tail.
fn encode_value(ty: &AbiType, data: &[u8], len: Option<usize>, out: &mut Vec<u8>) {
    match ty {
        AbiType::Uint(_) | AbiType::Address => out.extend(left_pad(data, 0)),
        AbiType::Int(_) => {
            let fill = if data[0] & 0x80 != 0 { 0xff } else { 0 };
            out.extend(left_pad(data, fill));
        }
        AbiType::Bool => out.extend(left_pad(&[data[0] & 1], 0)),
        AbiType::FixedBytes(n) => {
            let mut word = [0u8; 32];
            word[..*n].copy_from_slice(data);
            out.extend(word);
        }
        AbiType::FixedArray(elem, _) => {
            let w = elem.static_width().expect("static element");
            for chunk in data.chunks(w) {
                encode_value(elem, chunk, None, out);
            }
        }
        AbiType::Bytes | AbiType::String => {
            out.extend(U256::from(data.len()).to_big_endian());
            out.extend_from_slice(data);
            out.resize(out.len() + (32 - data.len() % 32) % 32, 0);
        }
        AbiType::Array(elem) => {
            let len = len.unwrap_or(0);
            out.extend(U256::from(len).to_big_endian());
            let w = elem.static_width().expect("static element");
            for chunk in data.chunks(w).take(len) {
                encode_value(elem, chunk, None, out);
            }
        }
    }
}

fn encode_tuple(entries: &[&GeneEntry], gene: &Gene) -> Vec<u8> {
    let head_len: usize = entries.iter().map(|e| e.ty.head_size()).sum();
    let mut head = Vec::with_capacity(head_len);
    let mut tail = Vec::new();
    for e in entries {
        let data = &gene.bytes[e.range.clone()];
        if e.ty.is_dynamic() {
            head.extend(U256::from(head_len + tail.len()).to_big_endian());
            encode_value(&e.ty, data, e.len, &mut tail);
        } else {
            encode_value(&e.ty, data, None, &mut head);
        }
    }
    head.extend(tail);
    head
}

/// Calldata for calling `spec` with the values stored in `gene`. Constructor
/// arguments come without a selector, ready to append to init code.
pub fn encode_args(spec: &FunctionSpec, gene: &Gene, map: &GeneMap) -> Result<Vec<u8>> {
    let entries = map.params_of(spec)?;
    if entries.iter().any(|e| e.range.end > gene.len()) {
        return Err(Error::GeneMismatch(format!(
            "gene of {} bytes is shorter than its map",
            gene.len()
        )));
    }
    let body = encode_tuple(&entries, gene);
    if spec.is_constructor {
        return Ok(body);
    }
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend(selector(spec));
    out.extend(body);
    Ok(out)
}

/// Integer stored in natural width, zero-extended.
pub fn read_uint(data: &[u8]) -> U256 {
    U256::from_big_endian(data)
}

pub fn read_address(data: &[u8]) -> Address {
    Address::from_slice(data)
}

/// Human-readable rendering of the value of one gene entry.
pub fn decode_entry(entry: &GeneEntry, gene: &Gene) -> Value {
    decode_value(&entry.ty, &gene.bytes[entry.range.clone()], entry.len)
}

fn decode_value(ty: &AbiType, data: &[u8], len: Option<usize>) -> Value {
    match ty {
        AbiType::Uint(_) => Value::String(read_uint(data).to_string()),
        AbiType::Int(bits) => {
            let v = read_uint(data);
            let negative = data[0] & 0x80 != 0;
            if negative {
                let magnitude = if *bits == 256 {
                    (!v).overflowing_add(U256::one()).0
                } else {
                    (U256::one() << *bits) - v
                };
                Value::String(format!("-{magnitude}"))
            } else {
                Value::String(v.to_string())
            }
        }
        AbiType::Address => Value::String(read_address(data).to_string()),
        AbiType::Bool => Value::Bool(data[0] & 1 == 1),
        AbiType::FixedBytes(_) | AbiType::Bytes => Value::String(format!("0x{}", hex::encode(data))),
        AbiType::String => Value::String(String::from_utf8_lossy(data).into_owned()),
        AbiType::FixedArray(elem, _) | AbiType::Array(elem) => {
            let w = elem.static_width().expect("static element");
            let n = len.unwrap_or(data.len() / w.max(1));
            Value::Array(
                data.chunks(w)
                    .take(n)
                    .map(|c| decode_value(elem, c, None))
                    .collect(),
            )
        }
    }
}

/// `(name, value)` pairs for the arguments of `spec`.
pub fn decode_args(spec: &FunctionSpec, gene: &Gene, map: &GeneMap) -> Result<Vec<(String, Value)>> {
    let entries = map.params_of(spec)?;
    Ok(entries
        .into_iter()
        .zip(&spec.inputs)
        .map(|(e, p)| (p.name.clone(), decode_entry(e, gene)))
        .collect())
}
