//! The mechanized lock-step symmetry argument.
//!
//! Identical deterministic processes driven in lock-step over identical
//! address mappings execute the same operation on the same data at every
//! turn, so their local states can never diverge — unless an operation can
//! return different results to different callers in the same round, which is
//! exactly what compare&swap does and reads/writes cannot. The checker
//! drives such an execution and verifies state equality (full canonical
//! encodings, not just digests) after every round, either over one class of
//! all processes or over caller-supplied symmetry classes such as the ring
//! adversary's Q-groups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::config::ConfigError;
use crate::memory::{AnonymousMemory, MemoryOp, Pid};
use crate::procs::{state_digest, state_encoding, Step, StepMachine, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// Round (1-based; 0 is the pre-execution check) after which the class
    /// members first disagreed.
    pub round: u64,
    /// Index of the last step executed before the disagreement was seen.
    pub step: u64,
    pub class_index: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub processes: usize,
    pub rounds_completed: u64,
    pub steps_executed: u64,
    /// True iff no class ever disagreed up to the bound.
    pub symmetric: bool,
    pub divergence: Option<Divergence>,
    /// True iff any process issued a compare&swap.
    pub used_cas: bool,
    pub first_cas_step: Option<u64>,
    pub all_halted: bool,
    pub verdicts: BTreeMap<Pid, Verdict>,
}

enum Slot {
    Running {
        machine: Box<dyn StepMachine>,
        pending: MemoryOp,
    },
    Halted(Verdict),
}

// Per-class comparable status: either the full local-state encoding or the
// final verdict.
#[derive(PartialEq, Eq, Clone)]
enum Status {
    Live(Vec<u8>),
    Halted(Verdict),
}

impl Status {
    fn describe(&self, pid: Pid, slots: &[Slot]) -> String {
        match self {
            Status::Live(_) => {
                let Slot::Running { machine, .. } = &slots[pid] else {
                    unreachable!()
                };
                format!("pid {pid} live (digest {:016x})", state_digest(machine.as_ref()))
            }
            Status::Halted(v) => format!("pid {pid} halted ({v:?})"),
        }
    }
}

/// Lock-step symmetry check with all processes in a single class. Requires
/// identical permutations for every process (the identical-views reduction:
/// with one shared address mapping, an anonymous-memory system is just a
/// process-anonymous system over named registers).
pub fn check_symmetry(
    machines: Vec<Box<dyn StepMachine>>,
    memory: AnonymousMemory,
    round_bound: u64,
) -> Result<SymmetryReport, ConfigError> {
    let n = memory.process_count();
    for pid in 1..n {
        if memory.permutation(pid)? != memory.permutation(0)? {
            return Err(ConfigError::NonUniformPermutations);
        }
    }
    let all: Vec<Pid> = (0..n).collect();
    Ok(check_class_symmetry(machines, memory, &[all], round_bound))
}

/// Lock-step symmetry check over explicit symmetry classes. Processes step
/// in pid order, halted ones are skipped, and after every full round each
/// class must be internally identical: same live/halted status, same local
/// state or verdict.
pub fn check_class_symmetry(
    machines: Vec<Box<dyn StepMachine>>,
    mut memory: AnonymousMemory,
    classes: &[Vec<Pid>],
    round_bound: u64,
) -> SymmetryReport {
    let n = machines.len();
    assert_eq!(n, memory.process_count(), "one machine per process");
    debug_assert_eq!(
        classes.iter().map(|c| c.len()).sum::<usize>(),
        n,
        "classes must partition the pids"
    );

    let mut slots: Vec<Slot> = machines
        .into_iter()
        .map(|mut machine| match machine.step(None) {
            Step::Yield(pending) => Slot::Running { machine, pending },
            Step::Halt(v) => Slot::Halted(v),
        })
        .collect();

    let mut steps_executed = 0u64;
    let mut rounds_completed = 0u64;
    let mut used_cas = false;
    let mut first_cas_step = None;
    let mut divergence = compare_classes(&slots, classes, 0, 0);

    if divergence.is_none() {
        for round in 1..=round_bound {
            if slots.iter().all(|s| matches!(s, Slot::Halted(_))) {
                break;
            }
            for pid in 0..n {
                let slot = &mut slots[pid];
                let Slot::Running { machine, pending } = slot else {
                    continue;
                };
                if !pending.is_rw() {
                    used_cas = true;
                    first_cas_step.get_or_insert(steps_executed);
                }
                let (result, _) = memory
                    .apply(pid, pending)
                    .expect("machines yield valid operations");
                match machine.step(Some(result)) {
                    Step::Yield(op) => *pending = op,
                    Step::Halt(v) => *slot = Slot::Halted(v),
                }
                steps_executed += 1;
            }
            rounds_completed = round;
            divergence = compare_classes(&slots, classes, round, steps_executed.saturating_sub(1));
            if divergence.is_some() {
                break;
            }
        }
    }

    let all_halted = slots.iter().all(|s| matches!(s, Slot::Halted(_)));
    let verdicts = slots
        .iter()
        .enumerate()
        .filter_map(|(pid, s)| match s {
            Slot::Halted(v) => Some((pid, *v)),
            Slot::Running { .. } => None,
        })
        .collect();

    SymmetryReport {
        processes: n,
        rounds_completed,
        steps_executed,
        symmetric: divergence.is_none(),
        divergence,
        used_cas,
        first_cas_step,
        all_halted,
        verdicts,
    }
}

fn compare_classes(
    slots: &[Slot],
    classes: &[Vec<Pid>],
    round: u64,
    last_step: u64,
) -> Option<Divergence> {
    for (class_index, class) in classes.iter().enumerate() {
        let mut first: Option<(Pid, Status)> = None;
        for &pid in class {
            let status = match &slots[pid] {
                Slot::Running { machine, .. } => Status::Live(state_encoding(machine.as_ref())),
                Slot::Halted(v) => Status::Halted(*v),
            };
            match &first {
                None => first = Some((pid, status)),
                Some((first_pid, first_status)) if *first_status != status => {
                    return Some(Divergence {
                        round,
                        step: last_step,
                        class_index,
                        detail: format!(
                            "{} vs {}",
                            first_status.describe(*first_pid, slots),
                            status.describe(pid, slots)
                        ),
                    });
                }
                _ => {}
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::Permutation;
    use crate::numth::Params;
    use crate::procs::rwlib::standard_rw_machines;
    use crate::procs::{alg1_machine, alg3_machine, StepMachine};
    use crate::sched::ring_adversary;

    fn uniform_memory(m: usize, n: usize) -> AnonymousMemory {
        AnonymousMemory::with_uniform_perm(m, n, Permutation::identity(m)).unwrap()
    }

    #[test]
    fn rw_machines_never_diverge() {
        for spec in standard_rw_machines() {
            for n in [2usize, 3, 5] {
                let machines: Vec<Box<dyn StepMachine>> =
                    (0..n).map(|_| spec.build(3)).collect();
                let report =
                    check_symmetry(machines, uniform_memory(3, n), 1_000).unwrap();
                assert!(
                    report.symmetric,
                    "{} diverged at {:?} for n={n}",
                    spec.name, report.divergence
                );
                assert!(!report.used_cas, "{} used CAS", spec.name);
                // No verdict asymmetry: all halted identically or none did.
                if report.all_halted {
                    let mut vs: Vec<_> = report.verdicts.values().collect();
                    vs.dedup();
                    assert_eq!(vs.len(), 1, "{}: mixed verdicts", spec.name);
                } else {
                    assert!(report.verdicts.is_empty());
                }
            }
        }
    }

    #[test]
    fn cas_breaks_symmetry_at_first_cas_round() {
        let machines: Vec<Box<dyn StepMachine>> =
            vec![Box::new(alg3_machine(1)), Box::new(alg3_machine(1))];
        let report = check_symmetry(machines, uniform_memory(1, 2), 1_000).unwrap();
        assert!(!report.symmetric);
        assert!(report.used_cas);
        // Both processes read zero in round 1 and issue their first CAS in
        // round 2; exactly one succeeds, so round 2 diverges.
        let div = report.divergence.unwrap();
        assert_eq!(div.round, 2);
        assert_eq!(report.first_cas_step, Some(2));
    }

    #[test]
    fn ring_q_classes_stay_symmetric_for_ladder_machines() {
        // Infeasible cell: gcd(2, 2) = 2 > d = 1; the single Q-class holds
        // both processes and must stay identical forever.
        let p = Params::new(2, 2, 1).unwrap();
        let (cfg, perms, _) = ring_adversary(2, 2);
        let machines: Vec<Box<dyn StepMachine>> = (0..2)
            .map(|_| Box::new(alg1_machine(&p)) as Box<dyn StepMachine>)
            .collect();
        let memory = AnonymousMemory::new(2, perms).unwrap();
        let report = check_class_symmetry(machines, memory, &cfg.q_sets, 500);
        assert!(report.symmetric, "diverged: {:?}", report.divergence);
        assert!(report.all_halted);
        // Symmetry forces an all-or-nothing outcome; here both withdraw.
        assert_eq!(report.verdicts.values().filter(|v| **v == Verdict::Leader).count(), 0);
    }
}
