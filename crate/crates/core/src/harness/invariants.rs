//! Per-trace invariant checking.
//!
//! Everything here is computed from the trace alone (operations, results,
//! snapshots, verdicts), replaying ops against a shadow memory rather than
//! trusting the recorded snapshots. The per-algorithm checks mechanize the
//! properties the election arguments rest on: round occupancy and ownership
//! accounting for the round ladder, register monotonicity, unit captures,
//! capture totals and phase ordering for the square-capture algorithm, and
//! the leader-count law for the single-register algorithm.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::harness::config::{resolve_permutations, AlgorithmId, ConfigError};
use crate::harness::trace::{ExecutionTrace, Termination};
use crate::memory::{MemoryOp, OpResult, Pid};
use crate::numth::{bezout_pair, gcd, in_m, Params};
use crate::procs::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantViolation {
    /// Stable identifier of the violated invariant.
    pub invariant: String,
    /// Step at which the violation was detected, when applicable.
    pub step: Option<u64>,
    pub detail: String,
}

fn violation(
    out: &mut Vec<InvariantViolation>,
    invariant: &str,
    step: Option<u64>,
    detail: String,
) {
    out.push(InvariantViolation {
        invariant: invariant.to_string(),
        step,
        detail,
    });
}

/// Checks every invariant applicable to the trace's algorithm. An empty
/// result means the trace is internally consistent and satisfies all of
/// them.
pub fn check_trace_invariants(
    trace: &ExecutionTrace,
) -> Result<Vec<InvariantViolation>, ConfigError> {
    trace.config.params.validate()?;
    let perms = resolve_permutations(&trace.config)?;
    let mut out = Vec::new();

    check_replay(trace, &perms, &mut out);
    match trace.config.algorithm {
        AlgorithmId::Alg1 => check_ladder(trace, &mut out),
        AlgorithmId::Alg2 => check_capture(trace, trace.config.params.d, &mut out),
        AlgorithmId::GcdComposition => {
            let p = trace.config.params;
            check_capture(trace, gcd(p.m, p.n), &mut out)
        }
        AlgorithmId::Alg3 => check_single_register(trace, &mut out),
    }
    check_verdict_completeness(trace, &mut out);

    Ok(out)
}

// Generic consistency: steps are gap-free, physical addresses follow the
// permutations, and results/snapshots match an independent replay of the
// operations over a shadow memory (reads return the last value written, a
// CAS succeeds exactly when the shadow holds its expected value).
fn check_replay(trace: &ExecutionTrace, perms: &[crate::memory::Permutation], out: &mut Vec<InvariantViolation>) {
    let m = trace.config.params.m as usize;
    let participants: BTreeSet<Pid> = trace.config.participation.iter().copied().collect();
    let mut shadow = vec![0u64; m];

    for (i, step) in trace.steps.iter().enumerate() {
        if step.index != i as u64 {
            violation(
                out,
                "trace-steps-gap-free",
                Some(i as u64),
                format!("step at position {i} carries index {}", step.index),
            );
        }
        if !participants.contains(&step.pid) {
            violation(
                out,
                "trace-participant",
                Some(step.index),
                format!("pid {} is not a participant", step.pid),
            );
            continue;
        }
        let addr = step.op.addr();
        let expected_phys = match perms.get(step.pid).map(|p| p.apply(addr)) {
            Some(Ok(phys)) => phys,
            _ => {
                violation(
                    out,
                    "physical-address",
                    Some(step.index),
                    format!("pid {} address {addr} does not resolve", step.pid),
                );
                continue;
            }
        };
        if expected_phys != step.physical_addr {
            violation(
                out,
                "physical-address",
                Some(step.index),
                format!(
                    "recorded physical {} but permutation gives {}",
                    step.physical_addr, expected_phys
                ),
            );
        }
        let slot = &mut shadow[expected_phys - 1];
        let expected_result = match step.op {
            MemoryOp::Read { .. } => OpResult::ReadValue { value: *slot },
            MemoryOp::Write { value, .. } => {
                *slot = value;
                OpResult::WriteAck
            }
            MemoryOp::CompareAndSwap { old, new, .. } => {
                if *slot == old {
                    *slot = new;
                    OpResult::CasOutcome { success: true }
                } else {
                    OpResult::CasOutcome { success: false }
                }
            }
        };
        if expected_result != step.result {
            violation(
                out,
                "replay-consistency",
                Some(step.index),
                format!("recorded {:?}, replay gives {:?}", step.result, expected_result),
            );
        }
        if step.registers != shadow {
            violation(
                out,
                "replay-consistency",
                Some(step.index),
                format!(
                    "recorded snapshot {:?}, replay gives {:?}",
                    step.registers, shadow
                ),
            );
        }
    }
}

// Round-ladder checks. A register is owned by the process that last set it
// positive; zero writes release. Ownership accounting says a process's
// successful captures equal its current holdings from its first step until
// it starts withdrawing. Round occupancy (only meaningful for feasible
// parameters) bounds how many processes ever carry round value r.
fn check_ladder(trace: &ExecutionTrace, out: &mut Vec<InvariantViolation>) {
    let p = trace.config.params;
    let m = p.m as usize;
    let target_round = p.n - p.d + 1;
    let feasible = in_m(p.m, p.n, p.d);

    let mut owner: Vec<Option<Pid>> = vec![None; m];
    let mut captures: BTreeMap<Pid, u64> = BTreeMap::new();
    let mut withdrawing: BTreeSet<Pid> = BTreeSet::new();
    let mut round_members: BTreeMap<u64, BTreeSet<Pid>> = BTreeMap::new();

    for step in &trace.steps {
        let phys = step.physical_addr;
        if phys < 1 || phys > m {
            return; // replay checks already reported this
        }
        match (step.op, step.result) {
            (MemoryOp::Write { value: 0, .. }, _) => {
                if owner[phys - 1] != Some(step.pid) {
                    violation(
                        out,
                        "alg1-release-by-non-owner",
                        Some(step.index),
                        format!(
                            "pid {} zeroed register {phys} owned by {:?}",
                            step.pid,
                            owner[phys - 1]
                        ),
                    );
                }
                owner[phys - 1] = None;
                withdrawing.insert(step.pid);
            }
            (MemoryOp::Write { value, .. }, _) => {
                if owner[phys - 1] != Some(step.pid) {
                    violation(
                        out,
                        "alg1-publish-by-non-owner",
                        Some(step.index),
                        format!(
                            "pid {} wrote {value} to register {phys} owned by {:?}",
                            step.pid,
                            owner[phys - 1]
                        ),
                    );
                }
                if value > target_round {
                    violation(
                        out,
                        "alg1-round-range",
                        Some(step.index),
                        format!("round value {value} exceeds target {target_round}"),
                    );
                }
                round_members.entry(value).or_default().insert(step.pid);
            }
            (MemoryOp::CompareAndSwap { old, new, .. }, OpResult::CasOutcome { success }) => {
                if old != 0 {
                    violation(
                        out,
                        "alg1-capture-from-nonzero",
                        Some(step.index),
                        format!("capture attempted from old value {old}"),
                    );
                }
                if new > target_round {
                    violation(
                        out,
                        "alg1-round-range",
                        Some(step.index),
                        format!("round value {new} exceeds target {target_round}"),
                    );
                }
                round_members.entry(new).or_default().insert(step.pid);
                if success {
                    if owner[phys - 1].is_some() {
                        violation(
                            out,
                            "alg1-ownership-accounting",
                            Some(step.index),
                            format!("captured register {phys} that still had an owner"),
                        );
                    }
                    owner[phys - 1] = Some(step.pid);
                    *captures.entry(step.pid).or_default() += 1;
                }
            }
            _ => {}
        }
        if !withdrawing.contains(&step.pid) {
            let owned = owner.iter().filter(|o| **o == Some(step.pid)).count() as u64;
            let won = captures.get(&step.pid).copied().unwrap_or(0);
            if owned != won {
                violation(
                    out,
                    "alg1-ownership-accounting",
                    Some(step.index),
                    format!("pid {} owns {owned} registers but captured {won}", step.pid),
                );
            }
        }
    }

    if feasible {
        for (&r, members) in &round_members {
            if r >= 2 && members.len() as u64 > p.n - r + 1 {
                violation(
                    out,
                    "alg1-round-occupancy",
                    None,
                    format!(
                        "{} processes executed round {r}, at most {} may",
                        members.len(),
                        p.n - r + 1
                    ),
                );
            }
        }
        if trace.termination == Termination::AllHalted && !trace.config.participation.is_empty() {
            let leaders = trace.leaders() as u64;
            if leaders < 1 || leaders > p.d {
                violation(
                    out,
                    "alg1-leader-bounds",
                    None,
                    format!("{leaders} leaders, expected between 1 and {}", p.d),
                );
            }
        }
    }
}

// Square-capture checks, parameterized by the effective leader target
// (d for the plain algorithm, gcd(m, n) for the composition).
fn check_capture(trace: &ExecutionTrace, d_eff: u64, out: &mut Vec<InvariantViolation>) {
    let p = trace.config.params;
    let m = p.m as usize;
    let inner = Params { n: p.n, m: p.m, d: d_eff };
    let Ok(bz) = bezout_pair(&inner) else {
        violation(
            out,
            "alg2-parameters",
            None,
            format!("no Bezout pair for n={}, m={}, d={d_eff}", p.n, p.m),
        );
        return;
    };
    let (u, v) = (bz.u, bz.v);

    let mut prev = vec![0u64; m];
    let mut wins: BTreeMap<Pid, u64> = BTreeMap::new();
    // Step index of each leader's final (successful) operation.
    let mut halt_step: BTreeMap<Pid, u64> = BTreeMap::new();

    for step in &trace.steps {
        match step.op {
            MemoryOp::Read { .. } => {}
            MemoryOp::Write { .. } => violation(
                out,
                "alg2-op-shape",
                Some(step.index),
                "square capture never writes directly".to_string(),
            ),
            MemoryOp::CompareAndSwap { old, new, .. } => {
                if new != old + 1 {
                    violation(
                        out,
                        "alg2-unit-capture",
                        Some(step.index),
                        format!("capture moved {old} -> {new}, must increment by one"),
                    );
                }
                if new > u {
                    violation(
                        out,
                        "alg2-register-cap",
                        Some(step.index),
                        format!("capture target {new} exceeds per-register cap {u}"),
                    );
                }
                if step.result == (OpResult::CasOutcome { success: true }) {
                    *wins.entry(step.pid).or_default() += 1;
                }
            }
        }
        for (x, (&now, &before)) in step.registers.iter().zip(prev.iter()).enumerate() {
            if now < before {
                violation(
                    out,
                    "alg2-register-monotone",
                    Some(step.index),
                    format!("register {} decreased {before} -> {now}", x + 1),
                );
            }
            if now > u {
                violation(
                    out,
                    "alg2-register-cap",
                    Some(step.index),
                    format!("register {} holds {now} > cap {u}", x + 1),
                );
            }
        }
        prev = step.registers.clone();
        halt_step.insert(step.pid, step.index);
    }

    // Phase ordering: at the first leader's winning step every participant
    // already holds v captured units (the leader itself holds v plus the
    // winning one).
    let first_leader_step = trace
        .verdicts
        .iter()
        .filter(|(_, v)| **v == Verdict::Leader)
        .filter_map(|(pid, _)| halt_step.get(pid).copied())
        .min();
    if let Some(boundary) = first_leader_step {
        let mut wins_at: BTreeMap<Pid, u64> = BTreeMap::new();
        for step in &trace.steps {
            if step.index > boundary {
                break;
            }
            if matches!(step.op, MemoryOp::CompareAndSwap { .. })
                && step.result == (OpResult::CasOutcome { success: true })
            {
                *wins_at.entry(step.pid).or_default() += 1;
            }
        }
        for &pid in &trace.config.participation {
            let w = wins_at.get(&pid).copied().unwrap_or(0);
            if w < v {
                violation(
                    out,
                    "alg2-phase-ordering",
                    Some(boundary),
                    format!(
                        "leader elected at step {boundary} while pid {pid} held only {w} of {v} units"
                    ),
                );
            }
        }
    }

    if trace.termination == Termination::AllHalted {
        let leaders = trace.leaders() as u64;
        if leaders != d_eff {
            violation(
                out,
                "alg2-exact-d",
                None,
                format!("{leaders} leaders, expected exactly {d_eff}"),
            );
        }
        let finals = trace.final_registers();
        let total: u64 = finals.iter().sum();
        if total != u * p.m || finals.iter().any(|&r| r != u) {
            violation(
                out,
                "alg2-capture-total",
                None,
                format!("final registers {finals:?}, expected {u} everywhere"),
            );
        }
        for (&pid, verdict) in &trace.verdicts {
            let w = wins.get(&pid).copied().unwrap_or(0);
            let expected = match verdict {
                Verdict::Leader => v + 1,
                Verdict::NotLeader => v,
            };
            if w != expected {
                violation(
                    out,
                    "alg2-won-cap",
                    None,
                    format!("pid {pid} ({verdict:?}) captured {w} units, expected {expected}"),
                );
            }
        }
    }
}

// Single-register checks: the register counts leaders, never exceeds d,
// and at quiescence exactly min(participants, d) processes won.
fn check_single_register(trace: &ExecutionTrace, out: &mut Vec<InvariantViolation>) {
    let d = trace.config.params.d;
    let mut prev = 0u64;
    for step in &trace.steps {
        if step.op.addr() != 1 {
            violation(
                out,
                "alg3-op-shape",
                Some(step.index),
                "single-register runs address register 1 only".to_string(),
            );
        }
        if let MemoryOp::CompareAndSwap { old, new, .. } = step.op {
            if new != old + 1 || new > d {
                violation(
                    out,
                    "alg3-register-cap",
                    Some(step.index),
                    format!("capture {old} -> {new} breaks the unit/cap rule (d = {d})"),
                );
            }
        }
        if let MemoryOp::Write { .. } = step.op {
            violation(
                out,
                "alg3-op-shape",
                Some(step.index),
                "single-register election never writes directly".to_string(),
            );
        }
        let now = step.registers[0];
        if now < prev || now > d {
            violation(
                out,
                "alg3-register-cap",
                Some(step.index),
                format!("register moved {prev} -> {now} with cap {d}"),
            );
        }
        prev = now;
    }

    if trace.termination == Termination::AllHalted {
        let participants = trace.config.participation.len() as u64;
        let expected = participants.min(d);
        let leaders = trace.leaders() as u64;
        if leaders != expected {
            violation(
                out,
                "alg3-leader-count",
                None,
                format!("{leaders} leaders, expected min(participants, d) = {expected}"),
            );
        }
        if trace.final_registers()[0] != leaders {
            violation(
                out,
                "alg3-leader-count",
                None,
                "final register does not equal the leader count".to_string(),
            );
        }
    }
}

fn check_verdict_completeness(trace: &ExecutionTrace, out: &mut Vec<InvariantViolation>) {
    let participants: BTreeSet<Pid> = trace.config.participation.iter().copied().collect();
    let verdict_pids: BTreeSet<Pid> = trace.verdicts.keys().copied().collect();
    if !verdict_pids.is_subset(&participants) {
        violation(
            out,
            "verdict-completeness",
            None,
            "verdicts recorded for non-participants".to_string(),
        );
    }
    if trace.termination == Termination::AllHalted && verdict_pids != participants {
        violation(
            out,
            "verdict-completeness",
            None,
            format!(
                "all halted but verdicts cover {verdict_pids:?} of {participants:?}"
            ),
        );
    }
}
