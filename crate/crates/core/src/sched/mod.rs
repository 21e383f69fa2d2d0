//! Scheduling policies and adversary constructions: fair seeded-random
//! scheduling, strict lock-step, and the ring-rotation adversary that
//! defeats election whenever some participant count shares too large a gcd
//! with the register count.

pub mod explore;

use std::collections::BTreeSet;

use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::digest::Encoder;
use crate::memory::{Permutation, Pid};
use crate::numth::gcd;

/// Which process runs next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum SchedulePolicy {
    /// Uniform choice among live processes; fair with probability 1.
    SeededRandom { seed: u64 },
    /// Fixed rotation over `order`, skipping halted processes.
    LockStep { order: Vec<Pid> },
}

/// A schedule plus the set of processes that invoke the election at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub policy: SchedulePolicy,
    pub participation: Vec<Pid>,
}

/// Runtime state of a schedule policy.
#[derive(Debug, Clone)]
pub struct Scheduler {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Random { rng: rand_chacha::ChaCha8Rng },
    LockStep { order: Vec<Pid>, cursor: usize },
}

impl Scheduler {
    pub fn new(policy: &SchedulePolicy) -> Self {
        let inner = match policy {
            SchedulePolicy::SeededRandom { seed } => Inner::Random {
                rng: rand_chacha::ChaCha8Rng::seed_from_u64(*seed),
            },
            SchedulePolicy::LockStep { order } => Inner::LockStep {
                order: order.clone(),
                cursor: 0,
            },
        };
        Self { inner }
    }

    /// Picks the next process to activate among the live (non-halted) ones.
    /// For lock-step schedules every live pid must appear in the order.
    pub fn next(&mut self, live: &BTreeSet<Pid>) -> Pid {
        assert!(!live.is_empty(), "scheduler invoked with no live processes");
        match &mut self.inner {
            Inner::Random { rng } => {
                let idx = (rng.next_u64() % live.len() as u64) as usize;
                *live.iter().nth(idx).expect("index in range")
            }
            Inner::LockStep { order, cursor } => {
                debug_assert!(live.iter().all(|p| order.contains(p)));
                loop {
                    let pid = order[*cursor];
                    *cursor = (*cursor + 1) % order.len();
                    if live.contains(&pid) {
                        return pid;
                    }
                }
            }
        }
    }

    /// True when the whole future of the schedule is a function of its
    /// current cursor (no randomness left).
    pub fn is_deterministic(&self) -> bool {
        matches!(self.inner, Inner::LockStep { .. })
    }

    /// Contributes the scheduler position to a global-state key.
    pub fn encode_cursor(&self, enc: &mut Encoder) {
        match &self.inner {
            Inner::Random { .. } => enc.put_tag(0),
            Inner::LockStep { cursor, .. } => {
                enc.put_tag(1);
                enc.put_usize(*cursor);
            }
        }
    }
}

/// The ring placement behind the impossibility witnesses.
///
/// `k` participants and `m` registers with `delta = gcd(m, k)`:
/// the participants are split once into `delta` groups `P_0..P_{delta-1}`
/// (process `i` joins `P_{i mod delta}`), which fix the starting points on
/// the ring, and once into `k/delta` groups `Q_0..Q_{k/delta-1}` (process
/// `i` joins `Q_{floor(i/delta)}`), which are the symmetry classes that a
/// lock-step run can never split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingAdversaryConfig {
    pub k: usize,
    pub delta: usize,
    /// Ring distance between the initial registers of consecutive P-groups:
    /// `m / delta`, so the rotation generating the placement has order
    /// exactly `delta`.
    pub spacing: usize,
    pub p_sets: Vec<Vec<Pid>>,
    pub q_sets: Vec<Vec<Pid>>,
    /// Ring position (0-based) of each participant's initial register.
    pub initial_offsets: Vec<usize>,
}

/// Builds the ring adversary for `k` participants over `m` registers:
/// the P/Q partitions, one rotation permutation per participant (logical
/// name `j` resolves to the register at ring distance `j - 1` from the
/// participant's initial register), and the lock-step schedule `0..k`.
pub fn ring_adversary(m: usize, k: usize) -> (RingAdversaryConfig, Vec<Permutation>, Schedule) {
    assert!(m >= 1 && k >= 1);
    let delta = gcd(m as u64, k as u64) as usize;
    let spacing = m / delta;

    let mut p_sets = vec![Vec::new(); delta];
    let mut q_sets = vec![Vec::new(); k / delta];
    let mut initial_offsets = Vec::with_capacity(k);
    for i in 0..k {
        p_sets[i % delta].push(i);
        q_sets[i / delta].push(i);
        initial_offsets.push((i % delta) * spacing);
    }

    let perms = initial_offsets
        .iter()
        .map(|&off| Permutation::rotation(m, off))
        .collect();

    let schedule = Schedule {
        policy: SchedulePolicy::LockStep {
            order: (0..k).collect(),
        },
        participation: (0..k).collect(),
    };

    (
        RingAdversaryConfig {
            k,
            delta,
            spacing,
            p_sets,
            q_sets,
            initial_offsets,
        },
        perms,
        schedule,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn live(pids: &[Pid]) -> BTreeSet<Pid> {
        pids.iter().copied().collect()
    }

    #[test]
    fn lock_step_rotates_in_order() {
        let mut s = Scheduler::new(&SchedulePolicy::LockStep { order: vec![0, 1, 2] });
        let l = live(&[0, 1, 2]);
        let picks: Vec<_> = (0..6).map(|_| s.next(&l)).collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn lock_step_skips_halted() {
        let mut s = Scheduler::new(&SchedulePolicy::LockStep { order: vec![0, 1, 2] });
        let all = live(&[0, 1, 2]);
        assert_eq!(s.next(&all), 0);
        assert_eq!(s.next(&all), 1);
        assert_eq!(s.next(&all), 2);
        let without_1 = live(&[0, 2]);
        let picks: Vec<_> = (0..4).map(|_| s.next(&without_1)).collect();
        assert_eq!(picks, vec![0, 2, 0, 2]);
    }

    #[test]
    fn seeded_random_is_roughly_uniform() {
        let mut s = Scheduler::new(&SchedulePolicy::SeededRandom { seed: 7 });
        let l = live(&[0, 1]);
        let mut counts = [0u32; 2];
        for _ in 0..10_000 {
            counts[s.next(&l)] += 1;
        }
        for c in counts {
            assert!((4_500..=5_500).contains(&c), "counts {counts:?}");
        }
    }

    #[test]
    fn seeded_random_is_deterministic() {
        let l = live(&[0, 1, 2, 3]);
        let mut a = Scheduler::new(&SchedulePolicy::SeededRandom { seed: 11 });
        let mut b = Scheduler::new(&SchedulePolicy::SeededRandom { seed: 11 });
        for _ in 0..100 {
            assert_eq!(a.next(&l), b.next(&l));
        }
    }

    #[test]
    fn ring_partitions_for_six_participants() {
        // gcd(9, 6) = 3.
        let (cfg, perms, schedule) = ring_adversary(9, 6);
        assert_eq!(cfg.delta, 3);
        assert_eq!(cfg.p_sets, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        assert_eq!(cfg.q_sets, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(cfg.spacing, 3);
        assert_eq!(cfg.initial_offsets, vec![0, 3, 6, 0, 3, 6]);
        assert_eq!(perms.len(), 6);
        assert_eq!(
            schedule.policy,
            SchedulePolicy::LockStep { order: vec![0, 1, 2, 3, 4, 5] }
        );
    }

    #[test]
    fn ring_two_processes_four_registers() {
        let (cfg, perms, _) = ring_adversary(4, 2);
        assert_eq!(cfg.delta, 2);
        assert_eq!(cfg.spacing, 2);
        assert_eq!(cfg.p_sets, vec![vec![0], vec![1]]);
        assert_eq!(cfg.q_sets, vec![vec![0, 1]]);
        assert_eq!(cfg.initial_offsets, vec![0, 2]);
        // Logical j is at ring distance j-1 from the initial register.
        assert_eq!(perms[0].apply(1).unwrap(), 1);
        assert_eq!(perms[1].apply(1).unwrap(), 3);
        assert_eq!(perms[1].apply(3).unwrap(), 1);
    }

    #[test]
    fn ring_is_inert_when_gcd_is_one() {
        let (cfg, perms, _) = ring_adversary(3, 2);
        assert_eq!(cfg.delta, 1);
        assert_eq!(cfg.p_sets, vec![vec![0, 1]]);
        assert_eq!(cfg.q_sets, vec![vec![0], vec![1]]);
        // Everyone starts at the same register with the same view.
        assert_eq!(perms[0], perms[1]);
    }

    #[test]
    fn ring_structure_is_well_formed_across_small_grid() {
        for m in 1..=12 {
            for k in 1..=8 {
                let (cfg, perms, _) = ring_adversary(m, k);
                assert_eq!(cfg.delta, gcd(m as u64, k as u64) as usize);
                for set in &cfg.p_sets {
                    assert_eq!(set.len(), cfg.k / cfg.delta);
                }
                for set in &cfg.q_sets {
                    assert_eq!(set.len(), cfg.delta);
                }
                for p in &perms {
                    assert!(Permutation::from_map(p.as_map().to_vec()).is_ok());
                }
                // Consecutive P-group starting points sit exactly
                // `spacing` apart around the ring, and the placement closes.
                for j in 0..cfg.delta {
                    let here = cfg.initial_offsets[j];
                    let next = cfg.initial_offsets[(j + 1) % cfg.delta];
                    assert_eq!((here + cfg.spacing) % m, next % m);
                }
            }
        }
    }
}
