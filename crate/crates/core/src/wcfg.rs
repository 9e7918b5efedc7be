//! Gas-weighted control-flow graph.
//!
//! Nodes are maximal non-branching runs of instructions. A node's weight is the
//! sum of the static fee of its opcodes; operand-dependent parts (memory
//! expansion, SSTORE, CALL surcharges, ...) are left out, so the weight is a
//! lower bound on what a complete pass through the block is charged.
//!
//! Edges carry feedback slots that a campaign fills from executions: the
//! largest gas ever accumulated in the source block before control left along
//! the edge, and the largest number of traversals in one execution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use primitive_types::U256;
use serde::{Deserialize, Serialize};

use crate::bytecode::{self, disassemble, op, Flow, Instruction};
use crate::evm::Feedback;

pub type BlockId = u32;

const NO_BLOCK: BlockId = BlockId::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
}

impl Edge {
    pub fn new(from: BlockId, to: BlockId) -> Self {
        Edge { from, to }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Fallthrough,
    /// Jump whose destination is a constant pushed inside the source block.
    Jump,
    /// Discovered at runtime (computed jump target).
    Dynamic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSlot {
    pub max_gas: u64,
    pub max_hits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInfo {
    pub kind: EdgeKind,
    pub slot: EdgeSlot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub start_offset: usize,
    /// One past the last byte of the block.
    pub end_offset: usize,
    /// Index range into [`Wcfg::instructions`].
    pub instructions: Range<usize>,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GasEstimate {
    Finite(u64),
    Infinite,
}

impl std::fmt::Display for GasEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GasEstimate::Finite(g) => write!(f, "{g}"),
            GasEstimate::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Wcfg {
    instructions: Vec<Instruction>,
    blocks: Vec<BasicBlock>,
    edges: BTreeMap<Edge, EdgeInfo>,
    /// Block starting at each byte offset, [`NO_BLOCK`] elsewhere.
    block_at: Vec<BlockId>,
    jumpdest: Vec<bool>,
}

pub fn build_wcfg(instructions: Vec<Instruction>) -> Wcfg {
    let span = instructions.last().map_or(0, Instruction::next_offset);
    let mut jumpdest = vec![false; span];
    let mut leader = vec![false; instructions.len()];
    for (i, ins) in instructions.iter().enumerate() {
        if ins.opcode == op::JUMPDEST {
            jumpdest[ins.offset] = true;
            leader[i] = true;
        }
        if ins.info().flow.ends_block() && i + 1 < instructions.len() {
            leader[i + 1] = true;
        }
    }
    if let Some(first) = leader.first_mut() {
        *first = true;
    }

    let mut blocks = Vec::new();
    let mut block_at = vec![NO_BLOCK; span];
    let mut start = 0;
    for i in 1..=instructions.len() {
        if i == instructions.len() || leader[i] {
            let id = blocks.len() as BlockId;
            let body = &instructions[start..i];
            let weight = body
                .iter()
                .map(|ins| bytecode::static_gas(ins.opcode).weight())
                .sum();
            block_at[instructions[start].offset] = id;
            blocks.push(BasicBlock {
                id,
                start_offset: instructions[start].offset,
                end_offset: instructions[i - 1].next_offset(),
                instructions: start..i,
                weight,
            });
            start = i;
        }
    }

    let mut cfg = Wcfg {
        instructions,
        blocks,
        edges: BTreeMap::new(),
        block_at,
        jumpdest,
    };
    cfg.add_static_edges();
    cfg
}

impl Wcfg {
    pub fn from_code(code: &[u8]) -> Self {
        let mut cfg = build_wcfg(disassemble(code));
        // a truncated trailing PUSH ends the block at the end of the code
        if let Some(last) = cfg.blocks.last_mut() {
            last.end_offset = last.end_offset.min(code.len());
        }
        cfg
    }

    fn add_static_edges(&mut self) {
        let mut found = Vec::new();
        for block in &self.blocks {
            let body = &self.instructions[block.instructions.clone()];
            let last = body.last().expect("blocks are never empty");
            let flow = last.info().flow;
            if flow.falls_through() && block.end_offset < self.block_at.len() {
                let next = self.block_at[block.end_offset];
                if next != NO_BLOCK {
                    found.push((Edge::new(block.id, next), EdgeKind::Fallthrough));
                }
            }
            if matches!(flow, Flow::Jump | Flow::Branch) {
                if let Some(target) = resolve_jump_target(body) {
                    if let Some(dst) = self.jumpdest_block(target) {
                        found.push((Edge::new(block.id, dst), EdgeKind::Jump));
                    }
                }
            }
        }
        for (edge, kind) in found {
            // a JUMPI whose target is its own fallthrough keeps the fallthrough kind
            self.edges
                .entry(edge)
                .or_insert(EdgeInfo { kind, slot: EdgeSlot::default() });
        }
    }

    fn jumpdest_block(&self, target: U256) -> Option<BlockId> {
        if target >= U256::from(self.jumpdest.len()) {
            return None;
        }
        let t = target.low_u64() as usize;
        self.jumpdest[t].then(|| self.block_at[t])
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn blocks(&self) -> &[BasicBlock] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id as usize]
    }

    pub fn block_instructions(&self, id: BlockId) -> &[Instruction] {
        &self.instructions[self.blocks[id as usize].instructions.clone()]
    }

    pub fn edges(&self) -> impl Iterator<Item = (Edge, &EdgeInfo)> {
        self.edges.iter().map(|(e, i)| (*e, i))
    }

    pub fn edge(&self, edge: Edge) -> Option<&EdgeInfo> {
        self.edges.get(&edge)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self, id: BlockId) -> impl Iterator<Item = (BlockId, EdgeKind)> + '_ {
        self.edges
            .range(Edge::new(id, 0)..=Edge::new(id, BlockId::MAX))
            .map(|(e, info)| (e.to, info.kind))
    }

    #[inline]
    pub fn block_starting_at(&self, offset: usize) -> Option<BlockId> {
        match self.block_at.get(offset) {
            Some(&id) if id != NO_BLOCK => Some(id),
            _ => None,
        }
    }

    /// Block containing the instruction at `offset`.
    pub fn block_containing(&self, offset: usize) -> Option<BlockId> {
        let idx = self
            .blocks
            .partition_point(|b| b.start_offset <= offset)
            .checked_sub(1)?;
        let block = &self.blocks[idx];
        (offset < block.end_offset).then_some(block.id)
    }

    #[inline]
    pub fn is_jumpdest(&self, target: U256) -> bool {
        target < U256::from(self.jumpdest.len()) && self.jumpdest[target.low_u64() as usize]
    }

    /// Folds one execution's feedback into the edge slots, adding any edge that
    /// only showed up at runtime as [`EdgeKind::Dynamic`].
    pub fn observe(&mut self, feedback: &Feedback) {
        for (edge, stat) in &feedback.edges {
            let info = self.edges.entry(*edge).or_insert(EdgeInfo {
                kind: EdgeKind::Dynamic,
                slot: EdgeSlot::default(),
            });
            info.slot.max_gas = info.slot.max_gas.max(stat.gas);
            info.slot.max_hits = info.slot.max_hits.max(stat.hits);
        }
    }

    /// Solc-style static estimate: longest weighted path from the entry over the
    /// statically known edges, or infinite as soon as a cycle is reachable.
    /// Intrinsic transaction gas is not included.
    pub fn static_estimate(&self) -> GasEstimate {
        if self.blocks.is_empty() {
            return GasEstimate::Finite(0);
        }
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Unseen,
            Open,
            Done,
        }
        let n = self.blocks.len();
        let succ: Vec<Vec<BlockId>> = (0..n as BlockId)
            .map(|b| {
                self.successors(b)
                    .filter(|(_, k)| *k != EdgeKind::Dynamic)
                    .map(|(to, _)| to)
                    .collect()
            })
            .collect();
        let mut mark = vec![Mark::Unseen; n];
        let mut longest = vec![0u64; n];
        // iterative post-order DFS; an edge into an open node closes a cycle
        let mut stack: Vec<(BlockId, usize)> = vec![(0, 0)];
        mark[0] = Mark::Open;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = &succ[node as usize];
            if *next < children.len() {
                let child = children[*next];
                *next += 1;
                match mark[child as usize] {
                    Mark::Open => return GasEstimate::Infinite,
                    Mark::Unseen => {
                        mark[child as usize] = Mark::Open;
                        stack.push((child, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                let tail = children
                    .iter()
                    .map(|&c| longest[c as usize])
                    .max()
                    .unwrap_or(0);
                longest[node as usize] = self.blocks[node as usize].weight.saturating_add(tail);
                mark[node as usize] = Mark::Done;
                stack.pop();
            }
        }
        GasEstimate::Finite(longest[0])
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph wcfg {\n");
        if !self.blocks.is_empty() {
            out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
        }
        for b in &self.blocks {
            let _ = writeln!(out, "  b{} [label=\"{}\\n{}\"];", b.id, b.id, b.weight);
        }
        for (edge, info) in &self.edges {
            let style = match info.kind {
                EdgeKind::Fallthrough => "",
                EdgeKind::Jump => " [style=bold]",
                EdgeKind::Dynamic => " [style=dashed]",
            };
            let _ = writeln!(out, "  b{} -> b{}{};", edge.from, edge.to, style);
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> WcfgJson {
        WcfgJson {
            entry: if self.blocks.is_empty() { None } else { Some(0) },
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson {
                    id: b.id,
                    start: b.start_offset,
                    end: b.end_offset,
                    weight: b.weight,
                    instructions: b.instructions.len(),
                    last_op: self.instructions[b.instructions.end - 1].name().to_string(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(e, info)| EdgeJson {
                    from: e.from,
                    to: e.to,
                    kind: info.kind,
                    max_gas: info.slot.max_gas,
                    max_hits: info.slot.max_hits,
                })
                .collect(),
        }
    }
}

/// Serialized form of a [`Wcfg`]; see `docs/formats.md`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WcfgJson {
    pub entry: Option<BlockId>,
    pub blocks: Vec<BlockJson>,
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockJson {
    pub id: BlockId,
    pub start: usize,
    pub end: usize,
    pub weight: u64,
    pub instructions: usize,
    pub last_op: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
    pub max_gas: u64,
    pub max_hits: u64,
}

/// Tracks constants through the block's stack effects and returns the
/// destination operand of the final JUMP/JUMPI when it was pushed inside the
/// block.
fn resolve_jump_target(body: &[Instruction]) -> Option<U256> {
    let (last, prefix) = body.split_last()?;
    debug_assert!(matches!(last.opcode, op::JUMP | op::JUMPI));
    // index 0 is the deepest known slot; anything below is unknown
    let mut stack: Vec<Option<U256>> = Vec::new();
    let ensure = |stack: &mut Vec<Option<U256>>, depth: usize| {
        if stack.len() < depth {
            let missing = depth - stack.len();
            stack.splice(0..0, std::iter::repeat_n(None, missing));
        }
    };
    for ins in prefix {
        let info = ins.info();
        match ins.opcode {
            op::PUSH1..=op::PUSH32 => stack.push(ins.push_value()),
            op::DUP1..=op::DUP16 => {
                let n = (ins.opcode - op::DUP1 + 1) as usize;
                ensure(&mut stack, n);
                let v = stack[stack.len() - n];
                stack.push(v);
            }
            op::SWAP1..=op::SWAP16 => {
                let n = (ins.opcode - op::SWAP1 + 1) as usize;
                ensure(&mut stack, n + 1);
                let top = stack.len() - 1;
                stack.swap(top, top - n);
            }
            _ => {
                ensure(&mut stack, info.pops as usize);
                stack.truncate(stack.len() - info.pops as usize);
                stack.extend(std::iter::repeat_n(None, info.pushes as usize));
            }
        }
    }
    stack.last().copied().flatten()
}
