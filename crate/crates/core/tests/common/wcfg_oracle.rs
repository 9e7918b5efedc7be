//! Structural checks on a W-CFG, phrased over raw bytes so they do not lean on
//! the disassembler under test.

use gasfuzz_core::Wcfg;

fn is_push(op: u8) -> bool {
    (0x60..=0x7f).contains(&op)
}

/// Opcodes after which control never simply continues. The create and
/// delegating call family halts too, since the interpreter rejects it.
fn ends_block(op: u8) -> bool {
    matches!(op, 0x00 | 0x56 | 0x57 | 0xf3 | 0xfd | 0xfe | 0xff)
        || matches!(op, 0xf0 | 0xf2 | 0xf4 | 0xf5 | 0xfa)
        || !is_defined(op)
}

fn is_defined(op: u8) -> bool {
    matches!(op,
        0x00..=0x0b | 0x10..=0x1d | 0x20 | 0x30..=0x3f | 0x40..=0x45 | 0x50..=0x5b
        | 0x60..=0xa4 | 0xf0..=0xf5 | 0xfa | 0xfd..=0xff)
}

/// Offsets at which an instruction starts.
pub fn instruction_starts(code: &[u8]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut pc = 0;
    while pc < code.len() {
        out.push(pc);
        let op = code[pc];
        pc += 1 + if is_push(op) { (op - 0x5f) as usize } else { 0 };
    }
    out
}

/// Returns a description of the first violated property, if any.
pub fn check(code: &[u8], cfg: &Wcfg) -> Result<(), String> {
    let starts = instruction_starts(code);
    let blocks = cfg.blocks();

    // partition: blocks are contiguous, ordered and cover the code
    let mut cursor = 0;
    for b in blocks {
        if b.start_offset != cursor {
            return Err(format!("block {} starts at {} not {cursor}", b.id, b.start_offset));
        }
        if b.end_offset <= b.start_offset {
            return Err(format!("block {} is empty", b.id));
        }
        cursor = b.end_offset;
    }
    if cursor != code.len() {
        return Err(format!("blocks cover {cursor} of {} bytes", code.len()));
    }

    let block_starts: std::collections::BTreeSet<usize> =
        blocks.iter().map(|b| b.start_offset).collect();
    let block_ends: std::collections::BTreeSet<usize> =
        blocks.iter().map(|b| b.end_offset).collect();
    for (i, &pc) in starts.iter().enumerate() {
        let op = code[pc];
        if op == 0x5b && !block_starts.contains(&pc) {
            return Err(format!("JUMPDEST at {pc} does not start a block"));
        }
        let next = starts.get(i + 1).copied().unwrap_or(code.len());
        if ends_block(op) && !block_ends.contains(&next) {
            return Err(format!("terminator 0x{op:02x} at {pc} does not end a block"));
        }
        // no block boundary falls inside an instruction
        for inner in pc + 1..next.min(code.len()) {
            if block_starts.contains(&inner) {
                return Err(format!("block starts inside instruction at {pc}"));
            }
        }
    }

    // maximality: every boundary is forced by a JUMPDEST or a terminator
    for b in blocks.iter().skip(1) {
        let prev = starts
            .iter()
            .rev()
            .find(|&&pc| pc < b.start_offset)
            .copied()
            .unwrap();
        if code[b.start_offset] != 0x5b && !ends_block(code[prev]) {
            return Err(format!("block boundary at {} is not forced", b.start_offset));
        }
    }
    Ok(())
}
