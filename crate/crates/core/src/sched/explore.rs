//! Exhaustive enumeration of all interleavings of a small system.
//!
//! Depth-first search over global states (all local-state encodings plus
//! the physical registers), deduplicated on the canonical encoding itself
//! rather than a hash, so collisions cannot fake coverage. A back-edge to a
//! state on the current DFS path flags a cycle: a schedule exists that runs
//! forever (spin loops do this legitimately under unfair schedules).

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::Encoder;
use crate::memory::{AnonymousMemory, MemoryOp, Pid};
use crate::procs::{Step, StepMachine, Verdict};

/// What exhaustive exploration found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreReport {
    /// Leader counts over all reachable terminal (all-halted) states.
    pub outcomes: BTreeSet<usize>,
    /// True iff some interleaving revisits a global state (potential
    /// non-termination).
    pub cycle_detected: bool,
    pub states_explored: usize,
    /// False when the state bound cut the search short.
    pub complete: bool,
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("state bound {bound} exceeded after exploring {} states", partial.states_explored)]
    StateBoundExceeded {
        bound: usize,
        partial: Box<ExploreReport>,
    },
}

#[derive(Clone)]
enum Slot {
    Running {
        machine: Box<dyn StepMachine>,
        pending: MemoryOp,
    },
    Halted(Verdict),
}

#[derive(Clone)]
struct World {
    slots: Vec<Slot>,
    mem: AnonymousMemory,
}

impl World {
    fn new(machines: Vec<Box<dyn StepMachine>>, mem: AnonymousMemory) -> Self {
        let slots = machines
            .into_iter()
            .map(|mut machine| match machine.step(None) {
                Step::Yield(pending) => Slot::Running { machine, pending },
                Step::Halt(v) => Slot::Halted(v),
            })
            .collect();
        Self { slots, mem }
    }

    /// Canonical key: local states and verdicts in pid order, then the
    /// physical registers. The memory op counter is deliberately excluded —
    /// two states with the same key have identical futures.
    fn key(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        for slot in &self.slots {
            match slot {
                Slot::Running { machine, .. } => {
                    enc.put_tag(0);
                    machine.encode_state(&mut enc);
                }
                Slot::Halted(v) => {
                    enc.put_tag(1);
                    enc.put_tag(matches!(v, Verdict::Leader) as u8);
                }
            }
        }
        enc.put_u64s(&self.mem.snapshot());
        enc.finish()
    }

    fn live_pids(&self) -> Vec<Pid> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(pid, s)| matches!(s, Slot::Running { .. }).then_some(pid))
            .collect()
    }

    fn leaders(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, Slot::Halted(Verdict::Leader)))
            .count()
    }

    fn step(&mut self, pid: Pid) {
        let slot = &mut self.slots[pid];
        let Slot::Running { machine, pending } = slot else {
            panic!("stepped a halted process");
        };
        let (result, _) = self
            .mem
            .apply(pid, pending)
            .expect("machine produced a valid operation");
        match machine.step(Some(result)) {
            Step::Yield(op) => *pending = op,
            Step::Halt(v) => *slot = Slot::Halted(v),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Color {
    OnPath,
    Done,
}

struct Frame {
    world: World,
    key: Vec<u8>,
    live: Vec<Pid>,
    next_branch: usize,
}

/// Explores every interleaving of `machines` over `mem`, visiting at most
/// `state_bound` distinct global states.
pub fn explore(
    machines: Vec<Box<dyn StepMachine>>,
    mem: AnonymousMemory,
    state_bound: usize,
) -> Result<ExploreReport, ExploreError> {
    assert_eq!(
        machines.len(),
        mem.process_count(),
        "one machine per registered process"
    );

    let mut colors: HashMap<Vec<u8>, Color> = HashMap::new();
    let mut outcomes = BTreeSet::new();
    let mut cycle_detected = false;

    let root = World::new(machines, mem);
    let root_key = root.key();
    let root_live = root.live_pids();
    colors.insert(root_key.clone(), Color::OnPath);
    let mut stack = Vec::new();
    if root_live.is_empty() {
        outcomes.insert(root.leaders());
        colors.insert(root_key, Color::Done);
    } else {
        stack.push(Frame {
            world: root,
            key: root_key,
            live: root_live,
            next_branch: 0,
        });
    }

    while let Some(frame) = stack.last_mut() {
        if frame.next_branch >= frame.live.len() {
            colors.insert(frame.key.clone(), Color::Done);
            stack.pop();
            continue;
        }
        let pid = frame.live[frame.next_branch];
        frame.next_branch += 1;

        let mut succ = frame.world.clone();
        succ.step(pid);
        let key = succ.key();
        match colors.get(&key) {
            Some(Color::OnPath) => cycle_detected = true,
            Some(Color::Done) => {}
            None => {
                if colors.len() >= state_bound {
                    return Err(ExploreError::StateBoundExceeded {
                        bound: state_bound,
                        partial: Box::new(ExploreReport {
                            outcomes,
                            cycle_detected,
                            states_explored: colors.len(),
                            complete: false,
                        }),
                    });
                }
                let live = succ.live_pids();
                if live.is_empty() {
                    outcomes.insert(succ.leaders());
                    colors.insert(key, Color::Done);
                } else {
                    colors.insert(key.clone(), Color::OnPath);
                    stack.push(Frame {
                        world: succ,
                        key,
                        live,
                        next_branch: 0,
                    });
                }
            }
        }
    }

    Ok(ExploreReport {
        outcomes,
        cycle_detected,
        states_explored: colors.len(),
        complete: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::Permutation;
    use crate::numth::{bezout_pair, Params};
    use crate::procs::{alg2_machine, alg3_machine, StepMachine};

    fn identity_mem(m: usize, n: usize) -> AnonymousMemory {
        AnonymousMemory::new(m, vec![Permutation::identity(m); n]).unwrap()
    }

    #[test]
    fn alg3_two_processes_always_elect_exactly_one() {
        let machines: Vec<Box<dyn StepMachine>> =
            vec![Box::new(alg3_machine(1)), Box::new(alg3_machine(1))];
        let report = explore(machines, identity_mem(1, 2), 100_000).unwrap();
        assert_eq!(report.outcomes, BTreeSet::from([1]));
        assert!(!report.cycle_detected);
        assert!(report.complete);
    }

    #[test]
    fn alg2_two_processes_two_registers_both_elected() {
        let p = Params::new(2, 2, 2).unwrap();
        let b = bezout_pair(&p).unwrap();
        let machines: Vec<Box<dyn StepMachine>> = (0..2)
            .map(|_| Box::new(alg2_machine(&p, &b)) as Box<dyn StepMachine>)
            .collect();
        let report = explore(machines, identity_mem(2, 2), 1_000_000).unwrap();
        assert_eq!(report.outcomes, BTreeSet::from([2]));
        assert!(report.complete);
    }

    #[test]
    fn state_bound_reports_partial_results() {
        let p = Params::new(3, 3, 3).unwrap();
        let b = bezout_pair(&p).unwrap();
        let machines: Vec<Box<dyn StepMachine>> = (0..3)
            .map(|_| Box::new(alg2_machine(&p, &b)) as Box<dyn StepMachine>)
            .collect();
        match explore(machines, identity_mem(3, 3), 50) {
            Err(ExploreError::StateBoundExceeded { bound: 50, partial }) => {
                assert!(!partial.complete);
                assert!(partial.states_explored >= 50);
            }
            other => panic!("expected bound exhaustion, got {other:?}"),
        }
    }
}
