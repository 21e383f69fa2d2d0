//! Drives executions to completion or bound, records replayable traces,
//! classifies outcomes against the election contracts, checks per-trace
//! invariants, and mechanizes the lock-step symmetry arguments.

pub mod config;
pub mod invariants;
pub mod sweep;
pub mod symmetry;
pub mod trace;
pub mod witness;

pub use config::{
    default_step_bound, machine_for, resolve, resolve_permutations, AlgorithmId, ConfigError,
    PermutationSpec, ResolvedRun, RunConfig,
};
pub use invariants::{check_trace_invariants, InvariantViolation};
pub use sweep::{sweep, FeasibilityCell, FeasibilityReport, SweepConfig, SweepError};
pub use symmetry::{check_class_symmetry, check_symmetry, Divergence, SymmetryReport};
pub use trace::{ExecutionTrace, Termination, TraceStep, TRACE_SCHEMA_VERSION};
pub use witness::{ring_witness, violating_k, WitnessReport};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::digest::Encoder;
use crate::memory::{AnonymousMemory, MemoryOp, Pid};
use crate::procs::{state_digest, state_encoding, Step, StepMachine, Verdict};
use crate::sched::Scheduler;
use trace::hex_bytes;

/// Runs a resolved execution until every participant halts or the step
/// bound is hit. Under deterministic (lock-step) schedules a revisited
/// global state ends the run early as [`Termination::CycleDetected`], since
/// the remainder would repeat forever.
pub fn run(resolved: ResolvedRun) -> ExecutionTrace {
    let ResolvedRun {
        config,
        machines,
        mut memory,
        mut scheduler,
    } = resolved;

    let mut slots: BTreeMap<Pid, (Box<dyn StepMachine>, MemoryOp)> = BTreeMap::new();
    let mut verdicts: BTreeMap<Pid, Verdict> = BTreeMap::new();

    // First activations run the processes' local initialization and fetch
    // their first memory operations; no shared access happens yet.
    for (pid, mut machine) in machines {
        match machine.step(None) {
            Step::Yield(op) => {
                slots.insert(pid, (machine, op));
            }
            Step::Halt(v) => {
                verdicts.insert(pid, v);
            }
        }
    }

    let detect_cycles = scheduler.is_deterministic();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut steps = Vec::new();
    let mut max_register_value = 0u64;

    let termination = loop {
        if slots.is_empty() {
            break Termination::AllHalted;
        }
        let index = steps.len() as u64;
        if index >= config.step_bound {
            break Termination::StepBoundExhausted {
                bound: config.step_bound,
            };
        }
        if detect_cycles && !seen.insert(global_key(&slots, &memory, &scheduler)) {
            break Termination::CycleDetected { step: index };
        }

        let live: BTreeSet<Pid> = slots.keys().copied().collect();
        let pid = scheduler.next(&live);
        let (mut machine, op) = slots.remove(&pid).expect("scheduler picked a live pid");
        let (result, physical_addr) = memory
            .apply(pid, &op)
            .expect("machines yield valid operations");
        let next = machine.step(Some(result));

        let state_digest = format!("{:016x}", state_digest(machine.as_ref()));
        let full_state = config
            .record_full_states
            .then(|| hex_bytes(&state_encoding(machine.as_ref())));
        match next {
            Step::Yield(op2) => {
                slots.insert(pid, (machine, op2));
            }
            Step::Halt(v) => {
                verdicts.insert(pid, v);
            }
        }

        let registers = memory.snapshot();
        if let Some(&mx) = registers.iter().max() {
            max_register_value = max_register_value.max(mx);
        }
        steps.push(TraceStep {
            index,
            pid,
            op,
            physical_addr,
            result,
            registers,
            state_digest,
            full_state,
        });
    };

    ExecutionTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        config,
        steps,
        verdicts,
        termination,
        max_register_value,
    }
}

// Future-determining global state: live local states, the registers, and
// the scheduler cursor. Halted processes and the op counter are excluded;
// two states with equal keys behave identically from here on.
fn global_key(
    slots: &BTreeMap<Pid, (Box<dyn StepMachine>, MemoryOp)>,
    memory: &AnonymousMemory,
    scheduler: &Scheduler,
) -> Vec<u8> {
    let mut enc = Encoder::new();
    for (pid, (machine, _)) in slots {
        enc.put_usize(*pid);
        machine.encode_state(&mut enc);
    }
    enc.put_u64s(&memory.snapshot());
    scheduler.encode_cursor(&mut enc);
    enc.finish()
}

/// Resolves and runs a configuration.
pub fn run_config(config: &RunConfig) -> Result<ExecutionTrace, ConfigError> {
    Ok(run(resolve(config)?))
}

/// Re-runs a trace's embedded configuration. The result is byte-identical
/// to the original trace whenever the original was produced by this
/// harness.
pub fn replay(trace: &ExecutionTrace) -> Result<ExecutionTrace, ConfigError> {
    run_config(&trace.config)
}

/// Which election contract to check a run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    /// At least one and at most `d` leaders.
    DElection,
    /// Exactly `d` leaders.
    ExactDElection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Contract {
    DElectionOk,
    ExactDOk,
    Violation { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeClass {
    pub leaders: usize,
    pub contract: Contract,
}

impl OutcomeClass {
    pub fn is_ok(&self) -> bool {
        !matches!(self.contract, Contract::Violation { .. })
    }
}

/// Classifies a finished trace against `problem` using the trace's own `d`.
pub fn classify(trace: &ExecutionTrace, problem: Problem) -> OutcomeClass {
    classify_with(trace, problem, trace.config.params.d)
}

/// Classifies against an explicit leader target (used by the gcd
/// composition, whose exact leader count is `gcd(m, n)` rather than `d`).
/// Runs that did not halt classify as violations: the liveness side of both
/// contracts requires termination.
pub fn classify_with(trace: &ExecutionTrace, problem: Problem, d: u64) -> OutcomeClass {
    let leaders = trace.leaders();
    let contract = match &trace.termination {
        Termination::StepBoundExhausted { bound } => Contract::Violation {
            reason: format!("non-termination: step bound {bound} exhausted"),
        },
        Termination::CycleDetected { step } => Contract::Violation {
            reason: format!("non-termination: cycle detected at step {step}"),
        },
        Termination::AllHalted => match problem {
            Problem::DElection => {
                if leaders == 0 {
                    Contract::Violation {
                        reason: "no leader".to_string(),
                    }
                } else if leaders as u64 > d {
                    Contract::Violation {
                        reason: format!("too many leaders: {leaders} > d = {d}"),
                    }
                } else {
                    Contract::DElectionOk
                }
            }
            Problem::ExactDElection => {
                if leaders as u64 == d {
                    Contract::ExactDOk
                } else {
                    Contract::Violation {
                        reason: format!("wrong leader count: {leaders} != d = {d}"),
                    }
                }
            }
        },
    };
    OutcomeClass { leaders, contract }
}
