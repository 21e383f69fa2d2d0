//! Adversary witness construction for infeasible parameters.
//!
//! When some participant count `k <= n` has `gcd(m, k) > d`, the ring
//! placement plus a lock-step schedule keeps each Q-class of `delta =
//! gcd(m, k)` processes perfectly symmetric, so leaders can only appear in
//! multiples of `delta > d` — the run can never satisfy the d-election
//! contract. The witness runs the configured algorithm under that adversary
//! and verifies both halves: per-round Q-class symmetry, and an outcome
//! that is not a valid d-election (zero leaders, too many, or
//! non-termination).

use serde::{Deserialize, Serialize};

use crate::harness::config::{machine_for, AlgorithmId, ConfigError, PermutationSpec, RunConfig};
use crate::harness::symmetry::{check_class_symmetry, SymmetryReport};
use crate::harness::trace::ExecutionTrace;
use crate::harness::{classify, run_config, Contract, OutcomeClass, Problem};
use crate::memory::AnonymousMemory;
use crate::numth::{gcd, Params};
use crate::procs::StepMachine;
use crate::sched::{ring_adversary, RingAdversaryConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub params: Params,
    pub algorithm: AlgorithmId,
    /// The participant count whose gcd with `m` exceeds `d`.
    pub k: usize,
    pub ring: RingAdversaryConfig,
    pub classification: OutcomeClass,
    pub symmetry: SymmetryReport,
    pub q_class_symmetric: bool,
    pub violates_delection: bool,
    pub trace: ExecutionTrace,
}

/// Participant count `k <= n` with `gcd(m, k) > d`, if any; such a `k`
/// exists exactly when `m` is outside the feasibility set M(n, d). Among
/// the violating counts this picks one maximizing `gcd(m, k)` (ties to the
/// larger `k`), which gives the most symmetric — most damning — adversary.
pub fn violating_k(p: &Params) -> Option<usize> {
    (2..=p.n)
        .filter(|&k| gcd(p.m, k) > p.d)
        .max_by_key(|&k| (gcd(p.m, k), k))
        .map(|k| k as usize)
}

/// Builds and runs the ring-adversary witness. Errors with
/// [`ConfigError::ParametersFeasible`] when no violating `k` exists.
pub fn ring_witness(
    p: &Params,
    algorithm: AlgorithmId,
    step_bound: Option<u64>,
) -> Result<WitnessReport, ConfigError> {
    p.validate()?;
    let k = violating_k(p).ok_or(ConfigError::ParametersFeasible)?;
    let m = p.m as usize;
    let (ring, perms, schedule) = ring_adversary(m, k);
    let step_bound = step_bound.unwrap_or(10_000).max(1);

    let config = RunConfig {
        algorithm,
        params: *p,
        schedule: schedule.policy,
        permutations: PermutationSpec::RingAdversary { k },
        participation: schedule.participation,
        step_bound,
        record_full_states: false,
    };
    let trace = run_config(&config)?;
    let classification = classify(&trace, Problem::DElection);
    let violates_delection = classification.contract != Contract::DElectionOk;

    // Re-drive the same lock-step execution under the class checker: the
    // round-robin order over live pids coincides with the run's schedule.
    let machines = (0..k)
        .map(|_| machine_for(algorithm, p))
        .collect::<Result<Vec<Box<dyn StepMachine>>, _>>()?;
    let memory = AnonymousMemory::new(m, perms)?;
    let round_bound = step_bound / k as u64 + 2;
    let symmetry = check_class_symmetry(machines, memory, &ring.q_sets, round_bound);
    let q_class_symmetric = symmetry.symmetric;

    Ok(WitnessReport {
        params: *p,
        algorithm,
        k,
        ring,
        classification,
        symmetry,
        q_class_symmetric,
        violates_delection,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Termination;

    #[test]
    fn violating_k_matches_feasibility() {
        use crate::numth::in_m;
        for n in 1..=8 {
            for m in 1..=10 {
                for d in 1..=n {
                    let p = Params::new(n, m, d).unwrap();
                    assert_eq!(violating_k(&p).is_some(), !in_m(m, n, d), "{p:?}");
                }
            }
        }
    }

    #[test]
    fn two_process_witness_violates_and_stays_symmetric() {
        let p = Params::new(2, 2, 1).unwrap();
        let w = ring_witness(&p, AlgorithmId::Alg1, Some(10_000)).unwrap();
        assert_eq!(w.k, 2);
        assert_eq!(w.ring.delta, 2);
        assert!(w.q_class_symmetric, "divergence: {:?}", w.symmetry.divergence);
        assert!(w.violates_delection, "got {:?}", w.classification);
    }

    #[test]
    fn six_process_partition_shape() {
        // gcd(9, k) > 2 holds at k = 3 and k = 6; the tie on gcd = 3 goes
        // to the larger count, giving the canonical six-process placement.
        let p = Params::new(6, 9, 2).unwrap();
        let w = ring_witness(&p, AlgorithmId::Alg1, Some(20_000)).unwrap();
        assert_eq!(w.k, 6);
        assert_eq!(w.ring.delta, 3);
        assert_eq!(w.ring.p_sets, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        assert_eq!(w.ring.q_sets, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(w.q_class_symmetric, "divergence: {:?}", w.symmetry.divergence);
        assert!(w.violates_delection);
    }

    #[test]
    fn feasible_parameters_yield_no_witness() {
        let p = Params::new(3, 5, 1).unwrap();
        assert!(matches!(
            ring_witness(&p, AlgorithmId::Alg1, None),
            Err(ConfigError::ParametersFeasible)
        ));
    }

    #[test]
    fn witness_terminates_or_cycles_but_never_elects_legally() {
        let p = Params::new(4, 6, 1).unwrap();
        let w = ring_witness(&p, AlgorithmId::Alg1, Some(10_000)).unwrap();
        assert!(w.violates_delection);
        assert!(matches!(
            w.trace.termination,
            Termination::AllHalted | Termination::CycleDetected { .. } | Termination::StepBoundExhausted { .. }
        ));
    }
}
