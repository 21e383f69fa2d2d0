//! Deterministic simulator and verification toolkit for leader election in
//! fully anonymous shared-memory systems: anonymous processes communicating
//! through anonymous read-modify-write registers.
//!
//! The crate is organized around a small interleaving model:
//!
//! * [`memory`] — the anonymous shared memory: `m` atomic registers reached
//!   through per-process name permutations.
//! * [`procs`] — processes as resumable step machines performing exactly one
//!   shared-memory access per activation, plus the election algorithms
//!   compiled into that interface.
//! * [`sched`] — scheduling policies (seeded-random, lock-step), the
//!   ring-rotation adversary, and an exhaustive interleaving explorer.
//! * [`harness`] — drives executions, records replayable traces, classifies
//!   outcomes against the election contracts, checks per-trace invariants,
//!   runs lock-step symmetry checks, and sweeps parameter ranges.
//! * [`numth`] — the feasibility predicates (`in_m`, divisibility, gcd
//!   bounds) and the Bezout pair construction that parameterizes exact
//!   d-election.
//!
//! Everything is deterministic: all randomness flows from explicit seeds and
//! every trace can be replayed byte-for-byte from its embedded configuration.

pub mod digest;
pub mod harness;
pub mod memory;
pub mod numth;
pub mod procs;
pub mod sched;

pub use harness::{
    check_symmetry, check_trace_invariants, classify, replay, run, run_config, AlgorithmId,
    ExecutionTrace, OutcomeClass, Problem, RunConfig, Termination,
};
pub use memory::{AnonymousMemory, MemoryOp, OpResult, Permutation, Pid};
pub use numth::{bezout_pair, divides, gcd, in_m, BezoutPair, Params};
pub use procs::{Step, StepMachine, Verdict};
