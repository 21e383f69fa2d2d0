//! A small library of deterministic read/write-only step machines.
//!
//! These exist to exercise the lock-step symmetry checker: any deterministic
//! machine restricted to reads and writes, run by identical processes over
//! identical address mappings, stays perfectly symmetric forever — no RW
//! machine can elect. The machines here branch on read values, derive
//! addresses from data, and halt with data-dependent verdicts to make that
//! check non-trivial.

use crate::digest::Encoder;
use crate::memory::{MemoryOp, OpResult};
use crate::procs::{Step, StepMachine, Verdict};

/// Named factory for one RW machine variant.
#[derive(Clone, Copy)]
pub struct RwMachineSpec {
    pub name: &'static str,
    build: fn(usize) -> Box<dyn StepMachine>,
}

impl RwMachineSpec {
    pub fn build(&self, m: usize) -> Box<dyn StepMachine> {
        (self.build)(m)
    }
}

impl std::fmt::Debug for RwMachineSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RwMachineSpec").field("name", &self.name).finish()
    }
}

/// The standard library of RW machines used by the symmetry suite.
pub fn standard_rw_machines() -> Vec<RwMachineSpec> {
    vec![
        RwMachineSpec { name: "round-robin-writer", build: |m| Box::new(RoundRobinWriter::new(m)) },
        RwMachineSpec { name: "echo-chain", build: |m| Box::new(EchoChain::new(m)) },
        RwMachineSpec { name: "max-hunter", build: |m| Box::new(MaxHunter::new(m)) },
        RwMachineSpec { name: "parity-toggler", build: |m| Box::new(ParityToggler::new(m)) },
        RwMachineSpec { name: "value-chaser", build: |m| Box::new(ValueChaser::new(m)) },
        RwMachineSpec { name: "silent-reader", build: |m| Box::new(SilentReader::new(m)) },
    ]
}

// --- round-robin-writer ----------------------------------------------------
// Per round: one write of the round number, then a full scan summing what it
// sees. Verdict after a fixed number of rounds depends on the running sum.

#[derive(Debug, Clone)]
struct RoundRobinWriter {
    m: usize,
    round: u64,
    acc: u64,
    pc: u8, // 0 = start, 1 = write pending, 2+j = read of register j pending
}

const WRITER_ROUNDS: u64 = 7;

impl RoundRobinWriter {
    fn new(m: usize) -> Self {
        Self { m, round: 0, acc: 0, pc: 0 }
    }

    fn write_op(&self) -> MemoryOp {
        MemoryOp::Write {
            addr: ((self.round - 1) as usize % self.m) + 1,
            value: self.round,
        }
    }
}

impl StepMachine for RoundRobinWriter {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (0, None) => {
                self.round = 1;
                self.pc = 1;
                Step::Yield(self.write_op())
            }
            (1, Some(OpResult::WriteAck)) => {
                self.pc = 2;
                Step::Yield(MemoryOp::Read { addr: 1 })
            }
            (pc, Some(OpResult::ReadValue { value })) if pc >= 2 => {
                self.acc = self.acc.wrapping_add(value);
                let j = (pc - 2) as usize + 1;
                if j < self.m {
                    self.pc = pc + 1;
                    Step::Yield(MemoryOp::Read { addr: j + 1 })
                } else if self.round == WRITER_ROUNDS {
                    Step::Halt(if self.acc % 2 == 0 { Verdict::Leader } else { Verdict::NotLeader })
                } else {
                    self.round += 1;
                    self.pc = 1;
                    Step::Yield(self.write_op())
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(10);
        enc.put_tag(self.pc);
        enc.put_u64(self.round);
        enc.put_u64(self.acc);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

// --- echo-chain -------------------------------------------------------------
// Reads register j, writes value+1 to the next register, advances j.

#[derive(Debug, Clone)]
struct EchoChain {
    m: usize,
    remaining: u64,
    j: usize,
    last: u64,
    pc: u8, // 0 start, 1 read pending, 2 write pending
}

impl EchoChain {
    fn new(m: usize) -> Self {
        Self { m, remaining: 2 * m as u64 + 3, j: 1, last: 0, pc: 0 }
    }
}

impl StepMachine for EchoChain {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (0, None) => {
                self.pc = 1;
                Step::Yield(MemoryOp::Read { addr: self.j })
            }
            (1, Some(OpResult::ReadValue { value })) => {
                self.last = value;
                self.j = self.j % self.m + 1;
                self.pc = 2;
                Step::Yield(MemoryOp::Write { addr: self.j, value: value + 1 })
            }
            (2, Some(OpResult::WriteAck)) => {
                self.remaining -= 1;
                if self.remaining == 0 {
                    Step::Halt(if self.last >= self.m as u64 { Verdict::Leader } else { Verdict::NotLeader })
                } else {
                    self.pc = 1;
                    Step::Yield(MemoryOp::Read { addr: self.j })
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(11);
        enc.put_tag(self.pc);
        enc.put_u64(self.remaining);
        enc.put_usize(self.j);
        enc.put_u64(self.last);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

// --- max-hunter -------------------------------------------------------------
// Scans for the maximum, bumps it at its first location, halts Leader once
// the maximum reaches a threshold.

#[derive(Debug, Clone)]
struct MaxHunter {
    m: usize,
    j: usize,
    best: u64,
    best_at: usize,
    pc: u8, // 0 start, 1 scan read pending, 2 write pending
}

const HUNTER_TARGET: u64 = 5;

impl MaxHunter {
    fn new(m: usize) -> Self {
        Self { m, j: 1, best: 0, best_at: 1, pc: 0 }
    }
}

impl StepMachine for MaxHunter {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (0, None) => {
                self.pc = 1;
                Step::Yield(MemoryOp::Read { addr: 1 })
            }
            (1, Some(OpResult::ReadValue { value })) => {
                if value > self.best {
                    self.best = value;
                    self.best_at = self.j;
                }
                if self.j < self.m {
                    self.j += 1;
                    Step::Yield(MemoryOp::Read { addr: self.j })
                } else {
                    self.pc = 2;
                    Step::Yield(MemoryOp::Write { addr: self.best_at, value: self.best + 1 })
                }
            }
            (2, Some(OpResult::WriteAck)) => {
                if self.best + 1 >= HUNTER_TARGET {
                    Step::Halt(Verdict::Leader)
                } else {
                    self.j = 1;
                    self.best = 0;
                    self.best_at = 1;
                    self.pc = 1;
                    Step::Yield(MemoryOp::Read { addr: 1 })
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(12);
        enc.put_tag(self.pc);
        enc.put_usize(self.j);
        enc.put_u64(self.best);
        enc.put_usize(self.best_at);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

// --- parity-toggler ----------------------------------------------------------

#[derive(Debug, Clone)]
struct ParityToggler {
    remaining: u64,
    last: u64,
    pc: u8,
}

impl ParityToggler {
    fn new(_m: usize) -> Self {
        Self { remaining: 9, last: 0, pc: 0 }
    }
}

impl StepMachine for ParityToggler {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (0, None) => {
                self.pc = 1;
                Step::Yield(MemoryOp::Read { addr: 1 })
            }
            (1, Some(OpResult::ReadValue { value })) => {
                self.last = value;
                self.pc = 2;
                Step::Yield(MemoryOp::Write { addr: 1, value: u64::from(value == 0) })
            }
            (2, Some(OpResult::WriteAck)) => {
                self.remaining -= 1;
                if self.remaining == 0 {
                    Step::Halt(if self.last == 1 { Verdict::Leader } else { Verdict::NotLeader })
                } else {
                    self.pc = 1;
                    Step::Yield(MemoryOp::Read { addr: 1 })
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(13);
        enc.put_tag(self.pc);
        enc.put_u64(self.remaining);
        enc.put_u64(self.last);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

// --- value-chaser -------------------------------------------------------------
// The next address is computed from the value just read; writes chase their
// own reads around the memory.

#[derive(Debug, Clone)]
struct ValueChaser {
    m: usize,
    remaining: u64,
    addr: usize,
    last: u64,
    pc: u8,
}

impl ValueChaser {
    fn new(m: usize) -> Self {
        Self { m, remaining: 11, addr: 1, last: 0, pc: 0 }
    }
}

impl StepMachine for ValueChaser {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (0, None) => {
                self.pc = 1;
                Step::Yield(MemoryOp::Read { addr: self.addr })
            }
            (1, Some(OpResult::ReadValue { value })) => {
                self.last = value;
                self.addr = (value as usize + self.addr) % self.m + 1;
                self.pc = 2;
                Step::Yield(MemoryOp::Write { addr: self.addr, value: value + 1 })
            }
            (2, Some(OpResult::WriteAck)) => {
                self.remaining -= 1;
                if self.remaining == 0 {
                    Step::Halt(if self.last % 3 == 0 { Verdict::Leader } else { Verdict::NotLeader })
                } else {
                    self.pc = 1;
                    Step::Yield(MemoryOp::Read { addr: self.addr })
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(14);
        enc.put_tag(self.pc);
        enc.put_u64(self.remaining);
        enc.put_usize(self.addr);
        enc.put_u64(self.last);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

// --- silent-reader ------------------------------------------------------------
// Never writes; cycles reads and always exits not leader.

#[derive(Debug, Clone)]
struct SilentReader {
    m: usize,
    j: usize,
    remaining: u64,
    pc: u8,
}

impl SilentReader {
    fn new(m: usize) -> Self {
        Self { m, j: 1, remaining: m as u64 + 2, pc: 0 }
    }
}

impl StepMachine for SilentReader {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (0, None) => {
                self.pc = 1;
                Step::Yield(MemoryOp::Read { addr: self.j })
            }
            (1, Some(OpResult::ReadValue { .. })) => {
                self.remaining -= 1;
                if self.remaining == 0 {
                    Step::Halt(Verdict::NotLeader)
                } else {
                    self.j = self.j % self.m + 1;
                    Step::Yield(MemoryOp::Read { addr: self.j })
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(15);
        enc.put_tag(self.pc);
        enc.put_usize(self.j);
        enc.put_u64(self.remaining);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_has_at_least_five_machines() {
        assert!(standard_rw_machines().len() >= 5);
    }

    #[test]
    fn all_library_machines_yield_only_rw_ops() {
        for spec in standard_rw_machines() {
            let mut machine = spec.build(3);
            let mut regs = [0u64; 3];
            let mut prev = None;
            for _ in 0..500 {
                match machine.step(prev.take()) {
                    Step::Yield(op) => {
                        assert!(op.is_rw(), "{} issued a CAS", spec.name);
                        let slot = &mut regs[op.addr() - 1];
                        prev = Some(match op {
                            MemoryOp::Read { .. } => OpResult::ReadValue { value: *slot },
                            MemoryOp::Write { value, .. } => {
                                *slot = value;
                                OpResult::WriteAck
                            }
                            MemoryOp::CompareAndSwap { .. } => unreachable!(),
                        });
                    }
                    Step::Halt(_) => break,
                }
            }
        }
    }
}
