//! Exact d-election by Bezout square capture, participation required.
//!
//! With `(u, v)` the smallest positive solution of `u*m = v*n + d`, the
//! memory holds `u * m` capturable units ("squares"), `u` per register. A
//! successful `compare&swap(R[x], w, w+1)` captures one unit. Each process
//! first captures `v` units; once its view shows at least `v*n` captures it
//! competes for one of the `d` units left over, and capturing one makes it a
//! leader. A process whose view shows all `u*m` units captured exits not
//! leader.

use crate::digest::Encoder;
use crate::memory::{MemoryOp, OpResult};
use crate::numth::{BezoutPair, Params};
use crate::procs::{Step, StepMachine, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pc {
    Start,
    /// Snapshot read of register `j` is pending.
    ReadView { j: usize },
    /// Capture attempt on register `x` (counting toward `v`) is pending.
    CaptureCas { x: usize },
    /// Final capture attempt on register `x` (the leader unit) is pending.
    FinalCas { x: usize },
}

#[derive(Debug, Clone)]
pub struct Alg2Machine {
    n: u64,
    m: usize,
    u: u64,
    v: u64,
    /// Units captured so far (never exceeds `v`; the leader unit is not
    /// counted because the machine halts on it).
    won: u64,
    /// Total captures visible in the last completed view.
    sum: u64,
    /// Per-register values from the last (non-atomic) memory scan.
    myview: Vec<u64>,
    pc: Pc,
}

impl Alg2Machine {
    pub fn new(p: &Params, b: &BezoutPair) -> Self {
        debug_assert_eq!(b.u * p.m, b.v * p.n + p.d, "not a Bezout pair for these params");
        Self {
            n: p.n,
            m: p.m as usize,
            u: b.u,
            v: b.v,
            won: 0,
            sum: 0,
            myview: vec![0; p.m as usize],
            pc: Pc::Start,
        }
    }

    /// Smallest register whose viewed value still has capturable units.
    fn stale_below_u(&self) -> Option<usize> {
        (1..=self.m).find(|&x| self.myview[x - 1] < self.u)
    }

    fn capture_op(&self, x: usize) -> MemoryOp {
        let seen = self.myview[x - 1];
        MemoryOp::CompareAndSwap {
            addr: x,
            old: seen,
            new: seen + 1,
        }
    }

    fn begin_scan(&mut self) -> Step {
        self.pc = Pc::ReadView { j: 1 };
        Step::Yield(MemoryOp::Read { addr: 1 })
    }

    fn after_scan(&mut self) -> Step {
        self.sum = self.myview.iter().sum();
        match self.stale_below_u() {
            Some(x) if self.won < self.v => {
                self.pc = Pc::CaptureCas { x };
                Step::Yield(self.capture_op(x))
            }
            Some(x) if self.sum >= self.v * self.n => {
                self.pc = Pc::FinalCas { x };
                Step::Yield(self.capture_op(x))
            }
            _ => self.loop_exit_check(),
        }
    }

    fn loop_exit_check(&mut self) -> Step {
        if self.sum == self.u * self.m as u64 {
            Step::Halt(Verdict::NotLeader)
        } else {
            self.begin_scan()
        }
    }
}

impl StepMachine for Alg2Machine {
    fn step(&mut self, prev: Option<OpResult>) -> Step {
        match (self.pc.clone(), prev) {
            (Pc::Start, None) => self.begin_scan(),
            (Pc::ReadView { j }, Some(OpResult::ReadValue { value })) => {
                self.myview[j - 1] = value;
                if j < self.m {
                    self.pc = Pc::ReadView { j: j + 1 };
                    Step::Yield(MemoryOp::Read { addr: j + 1 })
                } else {
                    self.after_scan()
                }
            }
            (Pc::CaptureCas { x }, Some(OpResult::CasOutcome { success })) => {
                if success {
                    self.won += 1;
                }
                if self.sum >= self.v * self.n {
                    // The leader-unit attempt follows in the same loop
                    // iteration, reusing the same viewed value.
                    self.pc = Pc::FinalCas { x };
                    Step::Yield(self.capture_op(x))
                } else {
                    self.loop_exit_check()
                }
            }
            (Pc::FinalCas { .. }, Some(OpResult::CasOutcome { success })) => {
                if success {
                    Step::Halt(Verdict::Leader)
                } else {
                    self.loop_exit_check()
                }
            }
            (pc, prev) => panic!("activation out of protocol: pc {pc:?}, prev {prev:?}"),
        }
    }

    fn encode_state(&self, enc: &mut Encoder) {
        enc.put_tag(2);
        let (tag, j) = match self.pc {
            Pc::Start => (0u8, 0usize),
            Pc::ReadView { j } => (1, j),
            Pc::CaptureCas { x } => (2, x),
            Pc::FinalCas { x } => (3, x),
        };
        enc.put_tag(tag);
        enc.put_usize(j);
        enc.put_u64(self.won);
        enc.put_u64(self.sum);
        enc.put_u64s(&self.myview);
    }

    fn clone_box(&self) -> Box<dyn StepMachine> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numth::bezout_pair;

    #[test]
    fn first_ops_scan_the_whole_memory() {
        let p = Params::new(5, 3, 1).unwrap();
        let b = bezout_pair(&p).unwrap();
        assert_eq!((b.u, b.v), (2, 1));
        let mut m = Alg2Machine::new(&p, &b);
        assert_eq!(m.step(None), Step::Yield(MemoryOp::Read { addr: 1 }));
        assert_eq!(
            m.step(Some(OpResult::ReadValue { value: 0 })),
            Step::Yield(MemoryOp::Read { addr: 2 })
        );
        assert_eq!(
            m.step(Some(OpResult::ReadValue { value: 0 })),
            Step::Yield(MemoryOp::Read { addr: 3 })
        );
        // All zeroes: capture the first register's first unit.
        assert_eq!(
            m.step(Some(OpResult::ReadValue { value: 0 })),
            Step::Yield(MemoryOp::CompareAndSwap { addr: 1, old: 0, new: 1 })
        );
    }

    #[test]
    fn exits_not_leader_when_view_is_saturated() {
        let p = Params::new(5, 3, 1).unwrap();
        let b = bezout_pair(&p).unwrap();
        let mut m = Alg2Machine::new(&p, &b);
        m.step(None);
        m.step(Some(OpResult::ReadValue { value: 2 }));
        m.step(Some(OpResult::ReadValue { value: 2 }));
        let step = m.step(Some(OpResult::ReadValue { value: 2 }));
        assert_eq!(step, Step::Halt(Verdict::NotLeader));
    }
}
