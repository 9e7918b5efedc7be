use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use primitive_types::U256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// 160-bit account address.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    /// Address whose last byte is `n`; handy for fixtures.
    pub const fn from_low_u8(n: u8) -> Self {
        let mut bytes = [0u8; 20];
        bytes[19] = n;
        Address(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Self {
        let mut out = [0u8; 20];
        out.copy_from_slice(&bytes[..20]);
        Address(out)
    }

    /// Low 160 bits of a word.
    pub fn from_word(word: U256) -> Self {
        let bytes = word.to_big_endian();
        Self::from_slice(&bytes[12..])
    }

    pub fn to_word(self) -> U256 {
        U256::from_big_endian(&self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Address {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 20];
        hex::decode_to_slice(s.trim().trim_start_matches("0x"), &mut out)?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Account {
    pub balance: U256,
    pub code: Vec<u8>,
    /// Only non-zero slots are kept.
    pub storage: BTreeMap<U256, U256>,
}

/// Accounts known to the interpreter. An address that has no entry does not
/// exist, which matters for CALL pricing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    accounts: BTreeMap<Address, Account>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exists(&self, addr: Address) -> bool {
        self.accounts.contains_key(&addr)
    }

    pub fn account(&self, addr: Address) -> Option<&Account> {
        self.accounts.get(&addr)
    }

    pub fn account_mut(&mut self, addr: Address) -> &mut Account {
        self.accounts.entry(addr).or_default()
    }

    pub fn insert_account(&mut self, addr: Address, account: Account) {
        self.accounts.insert(addr, account);
    }

    pub fn remove_account(&mut self, addr: Address) -> Option<Account> {
        self.accounts.remove(&addr)
    }

    pub fn addresses(&self) -> impl Iterator<Item = Address> + '_ {
        self.accounts.keys().copied()
    }

    pub fn balance(&self, addr: Address) -> U256 {
        self.accounts.get(&addr).map_or(U256::zero(), |a| a.balance)
    }

    pub fn set_balance(&mut self, addr: Address, balance: U256) {
        self.account_mut(addr).balance = balance;
    }

    pub fn code(&self, addr: Address) -> &[u8] {
        self.accounts.get(&addr).map_or(&[], |a| a.code.as_slice())
    }

    pub fn set_code(&mut self, addr: Address, code: Vec<u8>) {
        self.account_mut(addr).code = code;
    }

    pub fn storage(&self, addr: Address, key: U256) -> U256 {
        self.accounts
            .get(&addr)
            .and_then(|a| a.storage.get(&key).copied())
            .unwrap_or_default()
    }

    pub fn set_storage(&mut self, addr: Address, key: U256, value: U256) {
        let storage = &mut self.account_mut(addr).storage;
        if value.is_zero() {
            storage.remove(&key);
        } else {
            storage.insert(key, value);
        }
    }
}
