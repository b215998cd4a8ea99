//! Toy deterministic machine: an LCG-scrambled step counter that halts at
//! `program_length`. One-step proofs reveal the pre-state and the referee
//! re-executes it.

use serde::{Deserialize, Serialize};

use crate::commitment::{Digest, TAG_STATE};

pub const LCG_MUL: u64 = 6364136223846793005;
pub const LCG_INC: u64 = 1442695040888963407;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MachineState {
    /// Number of transitions applied so far.
    pub step_index: u64,
    pub acc: u64,
    /// Step at which the machine halts.
    pub program_length: u64,
}

impl MachineState {
    pub fn new(acc: u64, program_length: u64) -> Self {
        MachineState {
            step_index: 0,
            acc,
            program_length,
        }
    }

    pub fn is_halted(&self) -> bool {
        self.step_index >= self.program_length
    }

    /// The transition function F. Halted states are fixed points.
    pub fn step(&self) -> MachineState {
        if self.is_halted() {
            return *self;
        }
        MachineState {
            step_index: self.step_index + 1,
            acc: self.acc.wrapping_mul(LCG_MUL).wrapping_add(LCG_INC),
            program_length: self.program_length,
        }
    }

    /// Canonical serialization: three big-endian u64 words.
    pub fn to_bytes(&self) -> [u8; 24] {
        let mut out = [0u8; 24];
        out[..8].copy_from_slice(&self.step_index.to_be_bytes());
        out[8..16].copy_from_slice(&self.acc.to_be_bytes());
        out[16..].copy_from_slice(&self.program_length.to_be_bytes());
        out
    }

    pub fn commit(&self) -> Digest {
        Digest::tagged(TAG_STATE, &[&self.to_bytes()])
    }
}

/// Returns `S_1..=S_count` starting from `s0`.
pub fn run(s0: MachineState, count: u64) -> Vec<MachineState> {
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = s0;
    for _ in 0..count {
        cur = cur.step();
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepProof {
    pub pre_state: MachineState,
}

pub fn prove_step(s: &MachineState) -> StepProof {
    StepProof { pre_state: *s }
}

/// Accepts iff `h` commits to the revealed pre-state and `h2` to its successor.
pub fn verify_step(h: &Digest, h2: &Digest, p: &StepProof) -> bool {
    p.pre_state.commit() == *h && p.pre_state.step().commit() == *h2
}
