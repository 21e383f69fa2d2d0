//! d-election over a single RMW register.
//!
//! The register counts elected processes: read it, give up once it reached
//! `d`, otherwise try to increment it with `compare&swap`; success means
//! leadership, failure means retry against the fresher value.

use crate::digest::Encoder;
use crate::memory::{MemoryOp, OpResult};
use crate::procs::{Step, StepMachine, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pc {
    Start,
    ReadPending,
    CasPending,
}

#[derive(Debug, Clone)]
pub struct Alg3Machine {
    d: u64,
    myview: u64,
    pc: Pc,
}

impl Alg3Machine {
    pub fn new(d: u64) -> Self {
        Self {
            d,
            myview: 0,
            pc: Pc::Start,
        }
    }
}

impl StepMachine for Alg3Machine {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc, prev) {
            (Pc::Start, None) => {
                self.pc = Pc::ReadPending;
                Step::Yield(MemoryOp::Read { addr: 1 })
            }
            (Pc::ReadPending, Some(OpResult::ReadValue { value })) => {
                self.myview = value;
                if value >= self.d {
                    Step::Halt(Verdict::NotLeader)
                } else {
                    self.pc = Pc::CasPending;
                    Step::Yield(MemoryOp::CompareAndSwap {
                        addr: 1,
                        old: self.myview,
                        new: self.myview + 1,
                    })
                }
            }
            (Pc::CasPending, Some(OpResult::CasOutcome { success })) => {
                if success {
                    Step::Halt(Verdict::Leader)
                } else {
                    self.pc = Pc::ReadPending;
                    Step::Yield(MemoryOp::Read { addr: 1 })
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc:?}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(3);
        enc.put_tag(match self.pc {
            Pc::Start => 0,
            Pc::ReadPending => 1,
            Pc::CasPending => 2,
        });
        enc.put_u64(self.myview);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}
