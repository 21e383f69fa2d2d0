//! Round-ladder d-election over anonymous RMW registers, participation
//! optional.
//!
//! A process climbs rounds `1..=n-d+1`. Entering a round it republishes the
//! round number in every register it owns, then scans all `m` registers; a
//! register holding a value below the current round is contested with
//! `compare&swap(R[j], 0, round)` until the observed value catches up.
//! After the scan the process compares its holdings against the fair share
//! `m / competitors` (competitors = `n - round + 1`); if it owns too few it
//! releases everything and withdraws. Survivors of round `n-d+1` are
//! leaders.

use crate::digest::Encoder;
use crate::memory::{MemoryOp, OpResult};
use crate::numth::Params;
use crate::procs::{Step, StepMachine, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pc {
    Start,
    /// Republish write to owned register `j` is pending.
    Publish { j: usize },
    /// Scan read of register `j` (the contest loop's guard) is pending.
    ScanRead { j: usize },
    /// Capture attempt `compare&swap(R[j], 0, round)` is pending.
    Capture { j: usize },
    /// Release write (zero) to owned register `j` is pending; withdrawing.
    Release { j: usize },
}

#[derive(Debug, Clone)]
pub struct Alg1Machine {
    n: u64,
    m: usize,
    d: u64,
    round: u64,
    counter: u64,
    competitors: u64,
    /// `myview[j-1]` is true iff this process owns register `j` (it was the
    /// last to write a positive value there).
    myview: Vec<bool>,
    pc: Pc,
}

impl Alg1Machine {
    pub fn new(p: &Params) -> Self {
        Self {
            n: p.n,
            m: p.m as usize,
            d: p.d,
            round: 0,
            counter: 0,
            competitors: 0,
            myview: vec![false; p.m as usize],
            pc: Pc::Start,
        }
    }

    fn first_owned_at_or_after(&self, j0: usize) -> Option<usize> {
        (j0..=self.m).find(|&j| self.myview[j - 1])
    }

    fn target_round(&self) -> u64 {
        self.n - self.d + 1
    }

    fn enter_round(&mut self) -> Step {
        self.round += 1;
        match self.first_owned_at_or_after(1) {
            Some(j) => {
                self.pc = Pc::Publish { j };
                Step::Yield(MemoryOp::Write {
                    addr: j,
                    value: self.round,
                })
            }
            None => self.begin_scan(),
        }
    }

    fn begin_scan(&mut self) -> Step {
        self.pc = Pc::ScanRead { j: 1 };
        Step::Yield(MemoryOp::Read { addr: 1 })
    }

    fn end_of_round(&mut self) -> Step {
        self.competitors = self.n - self.round + 1;
        // counter < m / competitors, compared exactly over the rationals.
        if self.counter * self.competitors < self.m as u64 {
            match self.first_owned_at_or_after(1) {
                Some(j) => {
                    self.pc = Pc::Release { j };
                    Step::Yield(MemoryOp::Write { addr: j, value: 0 })
                }
                None => Step::Halt(Verdict::NotLeader),
            }
        } else if self.round == self.target_round() {
            Step::Halt(Verdict::Leader)
        } else {
            self.enter_round()
        }
    }
}

impl StepMachine for Alg1Machine {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc.clone(), prev) {
            (Pc::Start, None) => self.enter_round(),
            (Pc::Publish { j }, Some(OpResult::WriteAck)) => {
                match self.first_owned_at_or_after(j + 1) {
                    Some(j2) => {
                        self.pc = Pc::Publish { j: j2 };
                        Step::Yield(MemoryOp::Write {
                            addr: j2,
                            value: self.round,
                        })
                    }
                    None => self.begin_scan(),
                }
            }
            (Pc::ScanRead { j }, Some(OpResult::ReadValue { value })) => {
                if value < self.round {
                    // value < round implies the register is not ours.
                    self.pc = Pc::Capture { j };
                    Step::Yield(MemoryOp::CompareAndSwap {
                        addr: j,
                        old: 0,
                        new: self.round,
                    })
                } else if j < self.m {
                    self.pc = Pc::ScanRead { j: j + 1 };
                    Step::Yield(MemoryOp::Read { addr: j + 1 })
                } else {
                    self.end_of_round()
                }
            }
            (Pc::Capture { j }, Some(OpResult::CasOutcome { success })) => {
                self.myview[j - 1] = success;
                if success {
                    self.counter += 1;
                }
                // Re-evaluate the contest guard with a fresh read.
                self.pc = Pc::ScanRead { j };
                Step::Yield(MemoryOp::Read { addr: j })
            }
            (Pc::Release { j }, Some(OpResult::WriteAck)) => {
                match self.first_owned_at_or_after(j + 1) {
                    Some(j2) => {
                        self.pc = Pc::Release { j: j2 };
                        Step::Yield(MemoryOp::Write { addr: j2, value: 0 })
                    }
                    None => Step::Halt(Verdict::NotLeader),
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc:?}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(1);
        let (tag, j) = match self.pc {
            Pc::Start => (0u8, 0usize),
            Pc::Publish { j } => (1, j),
            Pc::ScanRead { j } => (2, j),
            Pc::Capture { j } => (3, j),
            Pc::Release { j } => (4, j),
        };
        enc.put_tag(tag);
        enc.put_usize(j);
        enc.put_u64(self.round);
        enc.put_u64(self.counter);
        enc.put_u64(self.competitors);
        enc.put_bools(&self.myview);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}
