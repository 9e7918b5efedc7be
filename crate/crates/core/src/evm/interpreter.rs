use std::collections::BTreeMap;

use primitive_types::U256;

use super::gas::{self, applied_refund, memory_expansion_cost, words};
use super::state::{Address, WorldState};
use super::trace::{StepTrace, Tracer};
use super::word::{self, from_bool};
use super::{EdgeStat, ExecutionEnv, ExecutionResult, Feedback, Status, STACK_LIMIT};
use crate::bytecode::{self, op, push_width, Flow};
use crate::hash::keccak256;
use crate::wcfg::{Edge, Wcfg};

/// Largest memory offset or length worth looking at; anything bigger cannot be
/// paid for with a 64-bit gas budget.
const MEMORY_LIMIT: u64 = u32::MAX as u64;

enum Exit {
    Stop,
    Return(Vec<u8>),
    Revert(Vec<u8>),
    Error(Status),
}

enum Change {
    Storage { key: U256, prev: U256 },
    Balance { addr: Address, prev: U256 },
    Created { addr: Address },
    Code { prev: Vec<u8> },
}

struct Machine<'a> {
    code: &'a [u8],
    calldata: &'a [u8],
    env: &'a ExecutionEnv,
    wcfg: &'a Wcfg,
    world: &'a mut WorldState,
    journal: Vec<Change>,
    stack: Vec<U256>,
    memory: Vec<u8>,
    pc: usize,
    gas: u64,
    refund: u64,
    return_buffer: Vec<u8>,
    /// Gas handed back by the callee during the current step.
    returned: u64,
    destructed: bool,
}

type Step = Result<(), Exit>;

const OUT_OF_GAS: Exit = Exit::Error(Status::OutOfGas);

pub(super) fn run<T: Tracer>(
    code: &[u8],
    calldata: &[u8],
    is_create: bool,
    env: &ExecutionEnv,
    world: &mut WorldState,
    wcfg: &Wcfg,
    tracer: &mut T,
) -> ExecutionResult {
    let intrinsic = gas::intrinsic_gas(if is_create { code } else { calldata }, is_create);
    if intrinsic > env.gas_limit {
        return failed_before_execution(Status::OutOfGas, env.gas_limit, env.gas_limit);
    }

    let mut m = Machine {
        code,
        calldata,
        env,
        wcfg,
        world,
        journal: Vec::new(),
        stack: Vec::with_capacity(64),
        memory: Vec::new(),
        pc: 0,
        gas: env.gas_limit - intrinsic,
        refund: 0,
        return_buffer: Vec::new(),
        returned: 0,
        destructed: false,
    };

    if is_create && !m.world.exists(env.address) {
        m.journal.push(Change::Created { addr: env.address });
        m.world.account_mut(env.address);
    }
    if !env.call_value.is_zero() && !m.transfer(env.sender, env.address, env.call_value) {
        m.rollback();
        return failed_before_execution(Status::Revert, intrinsic, intrinsic);
    }

    let mut block = wcfg.block_starting_at(0);
    let mut block_gas = 0u64;
    let mut edges: BTreeMap<Edge, EdgeStat> = BTreeMap::new();
    let mut snapshot = Vec::new();

    let mut exit = loop {
        if m.pc >= code.len() {
            break Exit::Stop;
        }
        let pc = m.pc;
        let opcode = code[pc];
        let gas_before = m.gas;
        m.returned = 0;
        if T::ENABLED {
            snapshot.clone_from(&m.stack);
        }
        let outcome = m.step(opcode);
        if let Err(Exit::Error(_)) = outcome {
            m.gas = 0;
        }
        let charged = gas_before + m.returned - m.gas;
        block_gas += gas_before - m.gas;
        if T::ENABLED {
            tracer.step(&StepTrace {
                pc,
                opcode,
                gas: gas_before,
                gas_cost: charged,
                gas_returned: m.returned,
                stack: &snapshot,
                stack_len_after: m.stack.len(),
                depth: 0,
                block,
            });
        }
        if let Err(exit) = outcome {
            break exit;
        }
        if let Some(next) = wcfg.block_starting_at(m.pc) {
            if let Some(from) = block {
                let stat = edges.entry(Edge::new(from, next)).or_default();
                stat.gas += block_gas;
                stat.hits += 1;
            }
            block = Some(next);
            block_gas = 0;
        }
    };

    if is_create {
        if let Exit::Return(runtime) = &exit {
            let deposit = gas::CODE_DEPOSIT_BYTE * runtime.len() as u64;
            if deposit > m.gas {
                block_gas += m.gas;
                m.gas = 0;
                exit = OUT_OF_GAS;
            } else {
                m.gas -= deposit;
                block_gas += deposit;
                let prev = std::mem::replace(&mut m.world.account_mut(env.address).code, runtime.clone());
                m.journal.push(Change::Code { prev });
            }
        }
    }

    let (status, return_data) = match exit {
        Exit::Stop => (Status::Success, Vec::new()),
        Exit::Return(data) => (Status::Success, data),
        Exit::Revert(data) => (Status::Revert, data),
        Exit::Error(status) => (status, Vec::new()),
    };
    if !status.is_success() {
        m.rollback();
    }

    let gas_used_raw = env.gas_limit - m.gas;
    let refund = if status.is_success() {
        applied_refund(m.refund, gas_used_raw)
    } else {
        0
    };
    let gas_used = gas_used_raw - refund;
    ExecutionResult {
        status,
        gas_used,
        gas_used_raw,
        refund,
        return_data,
        feedback: Feedback {
            status,
            total_gas: gas_used,
            intrinsic_gas: intrinsic,
            refund,
            terminal_block: block,
            terminal_gas: block_gas,
            edges,
        },
    }
}

fn failed_before_execution(status: Status, charged: u64, intrinsic: u64) -> ExecutionResult {
    ExecutionResult {
        status,
        gas_used: charged,
        gas_used_raw: charged,
        refund: 0,
        return_data: Vec::new(),
        feedback: Feedback {
            status,
            total_gas: charged,
            intrinsic_gas: intrinsic,
            refund: 0,
            terminal_block: None,
            terminal_gas: 0,
            edges: BTreeMap::new(),
        },
    }
}

fn as_u64(v: U256) -> Option<u64> {
    (v <= U256::from(u64::MAX)).then(|| v.low_u64())
}

impl Machine<'_> {
    #[inline]
    fn charge(&mut self, amount: u64) -> Step {
        if amount > self.gas {
            return Err(OUT_OF_GAS);
        }
        self.gas -= amount;
        Ok(())
    }

    #[inline]
    fn pop(&mut self) -> U256 {
        self.stack.pop().expect("stack depth checked before dispatch")
    }

    #[inline]
    fn push(&mut self, v: U256) {
        self.stack.push(v);
    }

    /// Charges for touching `[offset, offset + len)` and grows memory to cover
    /// it. Returns the range as native integers.
    fn touch_memory(&mut self, offset: U256, len: U256) -> Result<(usize, usize), Exit> {
        if len.is_zero() {
            return Ok((0, 0));
        }
        let limit = U256::from(MEMORY_LIMIT);
        if offset > limit || len > limit {
            return Err(OUT_OF_GAS);
        }
        let (offset, len) = (offset.low_u64(), len.low_u64());
        let new_words = words(offset + len);
        let old_words = (self.memory.len() / 32) as u64;
        if new_words > old_words {
            self.charge(memory_expansion_cost(old_words, new_words))?;
            self.memory.resize(new_words as usize * 32, 0);
        }
        Ok((offset as usize, len as usize))
    }

    /// Copies `len` bytes of `src` starting at `src_offset` into memory,
    /// reading zeros past the end of `src`.
    fn copy_to_memory(&mut self, dest: usize, src: &[u8], src_offset: U256, len: usize) {
        let target = &mut self.memory[dest..dest + len];
        let start = match as_u64(src_offset) {
            Some(s) if (s as usize) < src.len() => s as usize,
            _ => {
                target.fill(0);
                return;
            }
        };
        let available = (src.len() - start).min(len);
        target[..available].copy_from_slice(&src[start..start + available]);
        target[available..].fill(0);
    }

    fn copy_op(&mut self, src: Source) -> Step {
        let mem_offset = self.pop();
        let src_offset = self.pop();
        let len = self.pop();
        let (dest, n) = self.touch_memory(mem_offset, len)?;
        self.charge(gas::COPY_WORD * words(n as u64))?;
        if n == 0 {
            return Ok(());
        }
        match src {
            Source::Calldata => {
                let data = self.calldata;
                self.copy_to_memory(dest, data, src_offset, n);
            }
            Source::Code => {
                let data = self.code;
                self.copy_to_memory(dest, data, src_offset, n);
            }
            Source::ReturnData => {
                let data = std::mem::take(&mut self.return_buffer);
                self.copy_to_memory(dest, &data, src_offset, n);
                self.return_buffer = data;
            }
        }
        Ok(())
    }

    fn transfer(&mut self, from: Address, to: Address, value: U256) -> bool {
        let from_balance = self.world.balance(from);
        if from_balance < value {
            return false;
        }
        if !self.world.exists(to) {
            self.journal.push(Change::Created { addr: to });
            self.world.account_mut(to);
        }
        self.journal.push(Change::Balance { addr: from, prev: from_balance });
        self.world.set_balance(from, from_balance - value);
        let to_balance = self.world.balance(to);
        self.journal.push(Change::Balance { addr: to, prev: to_balance });
        self.world.set_balance(to, to_balance.overflowing_add(value).0);
        true
    }

    fn rollback(&mut self) {
        let addr = self.env.address;
        while let Some(change) = self.journal.pop() {
            match change {
                Change::Storage { key, prev } => self.world.set_storage(addr, key, prev),
                Change::Balance { addr, prev } => self.world.set_balance(addr, prev),
                Change::Created { addr } => {
                    self.world.remove_account(addr);
                }
                Change::Code { prev } => self.world.set_code(addr, prev),
            }
        }
    }

    fn read_calldata_word(&self, offset: U256) -> U256 {
        let mut buf = [0u8; 32];
        if let Some(start) = as_u64(offset).filter(|&s| (s as usize) < self.calldata.len()) {
            let start = start as usize;
            let n = (self.calldata.len() - start).min(32);
            buf[..n].copy_from_slice(&self.calldata[start..start + n]);
        }
        U256::from_big_endian(&buf)
    }

    fn jump_to(&mut self, target: U256) -> Step {
        if !self.wcfg.is_jumpdest(target) {
            return Err(Exit::Error(Status::BadJump));
        }
        self.pc = target.low_u64() as usize;
        Ok(())
    }

    fn step(&mut self, opcode: u8) -> Step {
        let info = bytecode::info(opcode);
        if !info.defined || info.flow == Flow::Invalid {
            return Err(Exit::Error(Status::InvalidOp));
        }
        let depth = self.stack.len();
        let pops = info.pops as usize;
        if depth < pops || depth - pops + info.pushes as usize > STACK_LIMIT {
            return Err(Exit::Error(Status::StackError));
        }
        self.charge(info.base_cost)?;

        let mut next_pc = self.pc + 1;
        match opcode {
            op::STOP => return Err(Exit::Stop),
            op::ADD => self.binary(|a, b| a.overflowing_add(b).0),
            op::MUL => self.binary(|a, b| a.overflowing_mul(b).0),
            op::SUB => self.binary(|a, b| a.overflowing_sub(b).0),
            op::DIV => self.binary(|a, b| if b.is_zero() { b } else { a / b }),
            op::SDIV => self.binary(word::sdiv),
            op::MOD => self.binary(|a, b| if b.is_zero() { b } else { a % b }),
            op::SMOD => self.binary(word::smod),
            op::ADDMOD => {
                let (a, b, n) = (self.pop(), self.pop(), self.pop());
                self.push(word::addmod(a, b, n));
            }
            op::MULMOD => {
                let (a, b, n) = (self.pop(), self.pop(), self.pop());
                self.push(word::mulmod(a, b, n));
            }
            op::EXP => {
                let (base, exponent) = (self.pop(), self.pop());
                self.charge(gas::EXP_BYTE * word::byte_len(exponent))?;
                self.push(base.overflowing_pow(exponent).0);
            }
            op::SIGNEXTEND => self.binary(word::signextend),
            op::LT => self.binary(|a, b| from_bool(a < b)),
            op::GT => self.binary(|a, b| from_bool(a > b)),
            op::SLT => self.binary(|a, b| from_bool(word::slt(a, b))),
            op::SGT => self.binary(|a, b| from_bool(word::slt(b, a))),
            op::EQ => self.binary(|a, b| from_bool(a == b)),
            op::ISZERO => {
                let a = self.pop();
                self.push(from_bool(a.is_zero()));
            }
            op::AND => self.binary(|a, b| a & b),
            op::OR => self.binary(|a, b| a | b),
            op::XOR => self.binary(|a, b| a ^ b),
            op::NOT => {
                let a = self.pop();
                self.push(!a);
            }
            op::BYTE => self.binary(word::byte),
            op::SHL => self.binary(word::shl),
            op::SHR => self.binary(word::shr),
            op::SAR => self.binary(word::sar),
            op::SHA3 => {
                let (offset, len) = (self.pop(), self.pop());
                let (start, n) = self.touch_memory(offset, len)?;
                self.charge(gas::SHA3_WORD * words(n as u64))?;
                let digest = keccak256(&self.memory[start..start + n]);
                self.push(U256::from_big_endian(&digest));
            }
            op::ADDRESS => self.push(self.env.address.to_word()),
            op::BALANCE => {
                let addr = Address::from_word(self.pop());
                self.push(self.world.balance(addr));
            }
            op::ORIGIN => self.push(self.env.origin.to_word()),
            op::CALLER => self.push(self.env.sender.to_word()),
            op::CALLVALUE => self.push(self.env.call_value),
            op::CALLDATALOAD => {
                let offset = self.pop();
                self.push(self.read_calldata_word(offset));
            }
            op::CALLDATASIZE => self.push(U256::from(self.calldata.len())),
            op::CALLDATACOPY => self.copy_op(Source::Calldata)?,
            op::CODESIZE => self.push(U256::from(self.code.len())),
            op::CODECOPY => self.copy_op(Source::Code)?,
            op::GASPRICE => self.push(self.env.gas_price),
            op::EXTCODESIZE => {
                let addr = Address::from_word(self.pop());
                self.push(U256::from(self.world.code(addr).len()));
            }
            op::EXTCODECOPY => {
                let addr = Address::from_word(self.pop());
                let (mem_offset, code_offset, len) = (self.pop(), self.pop(), self.pop());
                let (dest, n) = self.touch_memory(mem_offset, len)?;
                self.charge(gas::COPY_WORD * words(n as u64))?;
                if n > 0 {
                    let ext = self.world.code(addr).to_vec();
                    self.copy_to_memory(dest, &ext, code_offset, n);
                }
            }
            op::RETURNDATASIZE => self.push(U256::from(self.return_buffer.len())),
            op::RETURNDATACOPY => {
                let len = self.stack[self.stack.len() - 3];
                let offset = self.stack[self.stack.len() - 2];
                let end = offset.overflowing_add(len);
                if end.1 || end.0 > U256::from(self.return_buffer.len()) {
                    return Err(Exit::Error(Status::InvalidOp));
                }
                self.copy_op(Source::ReturnData)?;
            }
            op::EXTCODEHASH => {
                let addr = Address::from_word(self.pop());
                let hash = match self.world.account(addr) {
                    Some(acct) => U256::from_big_endian(&keccak256(&acct.code)),
                    None => U256::zero(),
                };
                self.push(hash);
            }
            op::BLOCKHASH => {
                let n = self.pop();
                let current = U256::from(self.env.block_number);
                let hash = if n < current && current - n <= U256::from(256) {
                    U256::from_big_endian(&keccak256(&n.to_big_endian()))
                } else {
                    U256::zero()
                };
                self.push(hash);
            }
            op::COINBASE => self.push(self.env.coinbase.to_word()),
            op::TIMESTAMP => self.push(U256::from(self.env.timestamp)),
            op::NUMBER => self.push(U256::from(self.env.block_number)),
            op::DIFFICULTY => self.push(self.env.difficulty),
            op::GASLIMIT => self.push(U256::from(self.env.gas_limit)),
            op::POP => {
                self.pop();
            }
            op::MLOAD => {
                let offset = self.pop();
                let (start, _) = self.touch_memory(offset, U256::from(32))?;
                let v = U256::from_big_endian(&self.memory[start..start + 32]);
                self.push(v);
            }
            op::MSTORE => {
                let (offset, value) = (self.pop(), self.pop());
                let (start, _) = self.touch_memory(offset, U256::from(32))?;
                self.memory[start..start + 32].copy_from_slice(&value.to_big_endian());
            }
            op::MSTORE8 => {
                let (offset, value) = (self.pop(), self.pop());
                let (start, _) = self.touch_memory(offset, U256::one())?;
                self.memory[start] = value.byte(0);
            }
            op::SLOAD => {
                let key = self.pop();
                self.push(self.world.storage(self.env.address, key));
            }
            op::SSTORE => {
                let (key, value) = (self.pop(), self.pop());
                let current = self.world.storage(self.env.address, key);
                let (cost, refund) = gas::sstore_cost(current, value);
                self.charge(cost)?;
                self.refund += refund;
                self.journal.push(Change::Storage { key, prev: current });
                self.world.set_storage(self.env.address, key, value);
            }
            op::JUMP => {
                let target = self.pop();
                return self.jump_to(target);
            }
            op::JUMPI => {
                let (target, cond) = (self.pop(), self.pop());
                if !cond.is_zero() {
                    return self.jump_to(target);
                }
            }
            op::PC => self.push(U256::from(self.pc)),
            op::MSIZE => self.push(U256::from(self.memory.len())),
            op::GAS => self.push(U256::from(self.gas)),
            op::JUMPDEST => {}
            op::PUSH1..=op::PUSH32 => {
                let width = push_width(opcode);
                let start = self.pc + 1;
                let end = (start + width).min(self.code.len());
                let mut buf = [0u8; 32];
                // Missing trailing bytes of a truncated PUSH read as zero.
                buf[32 - width..32 - width + (end - start)].copy_from_slice(&self.code[start..end]);
                self.push(U256::from_big_endian(&buf));
                next_pc = start + width;
            }
            op::DUP1..=op::DUP16 => {
                let n = (opcode - op::DUP1) as usize + 1;
                let v = self.stack[self.stack.len() - n];
                self.push(v);
            }
            op::SWAP1..=op::SWAP16 => {
                let n = (opcode - op::SWAP1) as usize + 1;
                let top = self.stack.len() - 1;
                self.stack.swap(top, top - n);
            }
            op::LOG0..=op::LOG4 => {
                let (offset, len) = (self.pop(), self.pop());
                for _ in 0..(opcode - op::LOG0) {
                    self.pop();
                }
                let (_, n) = self.touch_memory(offset, len)?;
                self.charge(gas::LOG_DATA_BYTE * n as u64)?;
            }
            op::CALL => self.call()?,
            op::RETURN | op::REVERT => {
                let (offset, len) = (self.pop(), self.pop());
                let (start, n) = self.touch_memory(offset, len)?;
                let data = self.memory[start..start + n].to_vec();
                return Err(if opcode == op::RETURN {
                    Exit::Return(data)
                } else {
                    Exit::Revert(data)
                });
            }
            op::SELFDESTRUCT => {
                let beneficiary = Address::from_word(self.pop());
                let balance = self.world.balance(self.env.address);
                if !balance.is_zero() && !self.world.exists(beneficiary) {
                    self.charge(gas::SELFDESTRUCT_NEW_ACCOUNT)?;
                }
                if !self.destructed {
                    self.refund += gas::SELFDESTRUCT_REFUND;
                    self.destructed = true;
                }
                self.transfer(self.env.address, beneficiary, balance);
                return Err(Exit::Stop);
            }
            _ => unreachable!("opcode {opcode:#04x} is marked defined but has no handler"),
        }
        self.pc = next_pc;
        Ok(())
    }

    #[inline]
    fn binary(&mut self, f: impl FnOnce(U256, U256) -> U256) {
        let a = self.pop();
        let b = self.pop();
        self.push(f(a, b));
    }

    /// CALL against the stub: prices the call and moves the value. No callee
    /// code runs, so forwarded gas is never deducted and the stipend of a
    /// value transfer is handed back in full.
    fn call(&mut self) -> Step {
        let _gas = self.pop();
        let to = Address::from_word(self.pop());
        let value = self.pop();
        let (in_offset, in_len) = (self.pop(), self.pop());
        let (out_offset, out_len) = (self.pop(), self.pop());

        let extra = gas::call_cost(value, self.world.exists(to)) - gas::CALL_BASE;
        self.charge(extra)?;
        self.touch_memory(in_offset, in_len)?;
        let (out_start, out_n) = self.touch_memory(out_offset, out_len)?;

        let balance_ok = self.world.balance(self.env.address) >= value;
        let ok = balance_ok && self.env.call_stub.succeed;
        if ok && !value.is_zero() {
            self.transfer(self.env.address, to, value);
        }
        if balance_ok && !value.is_zero() {
            // The stub burns nothing, so the whole stipend comes back.
            self.gas += gas::CALL_STIPEND;
            self.returned = gas::CALL_STIPEND;
        }
        self.return_buffer = if ok || balance_ok {
            self.env.call_stub.return_data.clone()
        } else {
            Vec::new()
        };
        let n = out_n.min(self.return_buffer.len());
        self.memory[out_start..out_start + n].copy_from_slice(&self.return_buffer[..n]);
        self.push(from_bool(ok));
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Source {
    Calldata,
    Code,
    ReturnData,
}
