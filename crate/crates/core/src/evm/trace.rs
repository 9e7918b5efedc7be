use std::io::{self, Write};

use primitive_types::U256;

use crate::bytecode;
use crate::wcfg::BlockId;

/// One executed instruction, reported after it ran.
#[derive(Debug, Clone, Copy)]
pub struct StepTrace<'a> {
    pub pc: usize,
    pub opcode: u8,
    /// Gas left before the instruction.
    pub gas: u64,
    /// Gas charged by the instruction, all remaining gas for exceptional halts.
    pub gas_cost: u64,
    /// Gas a callee gave back during the instruction (the unused CALL stipend).
    pub gas_returned: u64,
    /// Operand stack before the instruction, bottom first.
    pub stack: &'a [U256],
    pub stack_len_after: usize,
    pub depth: usize,
    pub block: Option<BlockId>,
}

pub trait Tracer {
    /// Lets the interpreter skip snapshotting the stack when nobody listens.
    const ENABLED: bool = true;

    fn step(&mut self, step: &StepTrace<'_>);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoopTracer;

impl Tracer for NoopTracer {
    const ENABLED: bool = false;

    #[inline]
    fn step(&mut self, _: &StepTrace<'_>) {}
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedStep {
    pub pc: usize,
    pub opcode: u8,
    pub gas: u64,
    pub gas_cost: u64,
    pub gas_returned: u64,
    pub stack: Vec<U256>,
    pub stack_len_after: usize,
    pub block: Option<BlockId>,
}

/// Keeps every step in memory.
#[derive(Debug, Default, Clone)]
pub struct VecTracer {
    pub steps: Vec<RecordedStep>,
}

impl Tracer for VecTracer {
    fn step(&mut self, s: &StepTrace<'_>) {
        self.steps.push(RecordedStep {
            pc: s.pc,
            opcode: s.opcode,
            gas: s.gas,
            gas_cost: s.gas_cost,
            gas_returned: s.gas_returned,
            stack: s.stack.to_vec(),
            stack_len_after: s.stack_len_after,
            block: s.block,
        });
    }
}

/// Writes one JSON object per step, e.g.
/// `{"pc":0,"op":96,"gas":"0x4c4b400","gasCost":"0x3","stack":[],"depth":0,"opName":"PUSH1"}`.
pub struct JsonTracer<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> JsonTracer<W> {
    pub fn new(out: W) -> Self {
        JsonTracer { out, error: None }
    }

    /// Returns the writer, or the first write error hit while tracing.
    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }

    fn write_step(&mut self, s: &StepTrace<'_>) -> io::Result<()> {
        write!(
            self.out,
            "{{\"pc\":{},\"op\":{},\"gas\":\"{:#x}\",\"gasCost\":\"{:#x}\",\"stack\":[",
            s.pc, s.opcode, s.gas, s.gas_cost
        )?;
        for (i, v) in s.stack.iter().enumerate() {
            if i > 0 {
                self.out.write_all(b",")?;
            }
            write!(self.out, "\"{v:#x}\"")?;
        }
        writeln!(
            self.out,
            "],\"depth\":{},\"opName\":\"{}\"}}",
            s.depth,
            bytecode::info(s.opcode).name
        )
    }
}

impl<W: Write> Tracer for JsonTracer<W> {
    fn step(&mut self, s: &StepTrace<'_>) {
        if self.error.is_none() {
            if let Err(e) = self.write_step(s) {
                self.error = Some(e);
            }
        }
    }
}
