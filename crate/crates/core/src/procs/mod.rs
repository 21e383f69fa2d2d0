//! Process-side logic: a resumable step-machine interface plus the election
//! algorithms compiled into it, one shared-memory access per activation.
//!
//! All local computation (round bookkeeping, view sums, loop control) is
//! bundled into the activation adjacent to a memory operation, matching the
//! standard interleaving model where atomicity is per register operation.

mod alg1;
mod alg2;
mod alg3;
pub mod rwlib;

pub use alg1::Alg1Machine;
pub use alg2::Alg2Machine;
pub use alg3::Alg3Machine;

use serde::{Deserialize, Serialize};

use crate::digest::{Encoder, fnv1a64};
use crate::memory::{MemoryOp, OpResult};
use crate::numth::{bezout_pair, gcd, BezoutPair, InfeasibleParams, Params};

/// Terminal outcome of a process. A halted machine never resumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Leader,
    NotLeader,
}

/// What one activation produces: the next atomic memory operation, or a
/// terminal verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Yield(MemoryOp),
    Halt(Verdict),
}

/// A process as a resumable, deterministic state machine.
///
/// `step` consumes the result of the previously yielded operation (`None`
/// on the first activation) and either yields the next operation or halts.
/// Identical `(state, result)` pairs must produce identical outputs; the
/// lock-step symmetry arguments rest on this. Activating a machine with a
/// result that does not match its pending operation, or after it halted, is
/// a harness bug and panics.
pub trait StepMachine {
    fn step(&mut self, prev: Option<OpResult>) -> Step;

    /// Canonical, equality-comparable encoding of the local state. Two
    /// machines are in the same state exactly when their encodings match.
    fn encode_state(&self, enc: &mut Encoder);

    fn clone_box(&self) -> Box<dyn StepMachine>;
}

impl Clone for Box<dyn StepMachine> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Canonical local-state encoding as owned bytes.
pub fn state_encoding(machine: &dyn StepMachine) -> Vec<u8> {
    let mut enc = Encoder::new();
    machine.encode_state(&mut enc);
    enc.finish()
}

/// Stable 64-bit digest of the local state.
pub fn state_digest(machine: &dyn StepMachine) -> u64 {
    fnv1a64(&state_encoding(machine))
}

/// Round-ladder d-election (participation optional).
pub fn alg1_machine(p: &Params) -> Alg1Machine {
    Alg1Machine::new(p)
}

/// Bezout square-capture exact d-election (participation required).
pub fn alg2_machine(p: &Params, b: &BezoutPair) -> Alg2Machine {
    Alg2Machine::new(p, b)
}

/// Single-register d-election for `m = 1`.
pub fn alg3_machine(d: u64) -> Alg3Machine {
    Alg3Machine::new(d)
}

/// d-election with required participation, by running exact
/// `gcd(m, n)`-election. Requires `gcd(m, n) <= d`; the resulting leader
/// count is exactly `gcd(m, n)`, which satisfies the d-election contract.
pub fn gcd_composition_machine(p: &Params) -> Result<Alg2Machine, InfeasibleParams> {
    let g = gcd(p.m, p.n);
    if g > p.d {
        return Err(InfeasibleParams::GcdExceedsD {
            n: p.n,
            m: p.m,
            d: p.d,
            gcd: g,
        });
    }
    let inner = Params {
        n: p.n,
        m: p.m,
        d: g,
    };
    let b = bezout_pair(&inner).expect("gcd(m, n) divides itself");
    Ok(Alg2Machine::new(&inner, &b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_composition_refuses_when_gcd_exceeds_d() {
        let p = Params::new(4, 2, 1).unwrap();
        assert!(matches!(
            gcd_composition_machine(&p),
            Err(InfeasibleParams::GcdExceedsD { gcd: 2, .. })
        ));
        assert!(gcd_composition_machine(&Params::new(6, 4, 3).unwrap()).is_ok());
    }
}
